"""Experiment presets that write trajectory CSVs plus a JSON summary."""
from __future__ import annotations

import logging
import math
import os

import numpy as np

from .config import ExperimentConfig
from .metrics import entry_time, estimate_interaction_ratios
from .outputs import write_json, write_table, write_trajectory
from .theory import theory_report
from .trainer import Trajectory, run

__all__ = ["PRESETS", "PRESET_DEFAULTS", "run_preset", "preset_config", "median_entry", "CONVERGENCE_TOL"]

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-8
ENTRY_NU = 0.1
SWEEP_ETAS = (1.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.01, 0.005, 0.001)
# every 10th iterate: full-resolution K=10 runs would write ~130 MB per CSV
FIG1 = dict(d=10, n=200, n_test=200, eta=0.001, init_scale=0.01, norm_w_star=1.0, mode="empirical",
            record_stride=10)

PRESET_DEFAULTS = {
    "fig1": dict(FIG1, K=(1, 3, 10)),
    "fig2-breakdown": dict(FIG1, K=(1, 3, 10)),
    "fig3-components": dict(FIG1, K=10),
    "fig4-ratios": dict(FIG1, K=10),
    "fig5-perp": dict(FIG1, K=(1, 3, 10)),
    "stepsize-sweep": dict(FIG1, K=(1, 3, 10), eta=SWEEP_ETAS),
    "fig8-entry-vs-eta": dict(FIG1, K=(1, 3, 10), eta=SWEEP_ETAS),
    "theory-report": dict(K=10, eta=0.001, norm_w_star=1.0),
}
PRESETS = tuple(PRESET_DEFAULTS)

THEORY_KEYS = ("nu", "gamma", "w0_first", "c1", "c2", "t", "theta", "vartheta")


def preset_config(name: str, overrides: dict = None) -> ExperimentConfig:
    """Preset defaults updated with ``overrides`` (unknown preset -> KeyError)."""
    if name not in PRESET_DEFAULTS:
        raise KeyError(name)
    return ExperimentConfig(**{**PRESET_DEFAULTS[name], **(overrides or {})})


def median_entry(values):
    """Median with ``None`` (never entered) ranked above every finite time."""
    if not values:
        return None
    m = float(np.median([math.inf if v is None else v for v in values]))
    return None if math.isinf(m) else m


def _seeds(cfg):
    return [cfg.seed + i for i in range(cfg.trials)]


def _run_grid(cfg, out_dir, tag, write=True):
    """Run every (eta, K, seed) combination; return [(run_cfg, traj, csv_name)]."""
    runs = []
    for base in cfg.expand():
        for seed in _seeds(cfg):
            rc = base.replace(seed=seed)
            log.info("%s: eta=%g K=%d seed=%d", tag, rc.eta, rc.K, seed)
            traj = run(rc)
            name = f"{tag}_eta{rc.eta:g}_K{rc.K}_seed{seed}.csv"
            if write:
                write_trajectory(traj, os.path.join(out_dir, name))
            runs.append((rc, traj, name))
    return runs


def _run_summary(rc, traj: Trajectory, name):
    return {
        "file": name,
        "eta": rc.eta,
        "K": rc.K,
        "seed": rc.seed,
        "status": traj.status,
        "stopped_at": traj.stopped_at,
        "last_t": int(traj.t[-1]),
        "final_train_loss": float(traj.train_loss[-1]),
        "final_test_loss": float(traj.test_loss[-1]),
        "final_dist": float(traj.dist[-1]),
        "converged": bool(not traj.diverged and traj.train_loss[-1] < CONVERGENCE_TOL),
        "entry_curvature": entry_time(traj, "curvature"),
        "entry_dist": entry_time(traj, "nu", nu=ENTRY_NU),
    }


def _aggregate(rows):
    groups = {}
    for r in rows:
        groups.setdefault((r["eta"], r["K"]), []).append(r)
    out = []
    for (eta, K), rs in sorted(groups.items(), key=lambda kv: (-kv[0][0], kv[0][1])):
        out.append({
            "eta": eta,
            "K": K,
            "median_entry_curvature": median_entry([r["entry_curvature"] for r in rs]),
            "median_entry_dist": median_entry([r["entry_dist"] for r in rs]),
            "n_converged": sum(r["converged"] for r in rs),
            "n_diverged": sum(r["status"] == "diverged" for r in rs),
            "runs": len(rs),
        })
    return out


def _per_neuron_table(traj, columns):
    header = ["t"]
    for k in range(1, traj.K + 1):
        header += [f"{c}_{k}" for c, _ in columns]

    def rows():
        for i in range(len(traj)):
            row = [int(traj.t[i])]
            for k in range(traj.K):
                row += [fn(i, k) for _, fn in columns]
            yield row

    return header, rows()


def _breakdown(traj, path):
    a = traj.norm_w_star ** 2
    par, perp = traj.parallel, traj.perp_norm
    header, rows = _per_neuron_table(traj, [
        ("abs_par", lambda i, k: abs(par[i, k])),
        ("sq_norm", lambda i, k: (par[i, k] ** 2 / a if a > 0 else 0.0) + perp[i, k] ** 2),
    ])
    extra = zip(traj.agg_parallel, traj.frob_sq)
    write_table(path, header + ["agg_parallel", "frob_sq"],
                (list(r) + list(e) for r, e in zip(rows, extra)))


def _components(traj, path):
    header, rows = _per_neuron_table(traj, [
        ("compA", lambda i, k: traj.compA[i, k]),
        ("compB", lambda i, k: traj.compB[i, k]),
        ("compC_norm", lambda i, k: traj.compC_norm[i, k]),
        ("compD_norm", lambda i, k: traj.compD_norm[i, k]),
    ])
    write_table(path, header, rows)


def _safe_ratio(num, den):
    return abs(num) / abs(den) if abs(den) >= 1e-15 else 0.0


def _ratios(traj, path):
    header, rows = _per_neuron_table(traj, [
        ("ratio_BA", lambda i, k: _safe_ratio(traj.compB[i, k], traj.compA[i, k])),
        ("ratio_DC", lambda i, k: _safe_ratio(traj.compD_norm[i, k], traj.compC_norm[i, k])),
    ])
    write_table(path, header, rows)


def _perp(traj, path):
    header, rows = _per_neuron_table(traj, [("perp_norm", lambda i, k: traj.perp_norm[i, k])])
    write_table(path, header, rows)


_EXTRA = {
    "fig2-breakdown": ("breakdown", _breakdown),
    "fig3-components": ("components", _components),
    "fig4-ratios": ("ratios", _ratios),
    "fig5-perp": ("perp", _perp),
}


def run_preset(name: str, config: ExperimentConfig, out_dir, theory_args: dict = None) -> dict:
    """Run preset ``name`` with ``config`` and write its outputs under ``out_dir``.

    Returns the summary that is also written to ``out_dir/summary.json``.
    Divergent runs are recorded in the summary, not treated as failures.
    """
    if name not in PRESET_DEFAULTS:
        raise KeyError(name)
    os.makedirs(out_dir, exist_ok=True)
    tag = name.replace("-", "_")
    summary = {"preset": name, "config": config.to_dict()}
    summary["config"].pop("out_dir", None)

    if name == "theory-report":
        args = dict(theory_args or {})
        report = theory_report(eta=config.etas[0], norm_w_star=config.norm_w_star, K=config.Ks[0], **args)
        summary["theory"] = report.to_dict()
        write_json(summary, os.path.join(out_dir, "summary.json"))
        return summary

    runs = _run_grid(config, out_dir, tag)
    rows = [_run_summary(rc, tr, fn) for rc, tr, fn in runs]
    summary["runs"] = rows
    summary["groups"] = _aggregate(rows)

    if name in _EXTRA:
        suffix, writer = _EXTRA[name]
        for rc, traj, fn in runs:
            writer(traj, os.path.join(out_dir, fn.replace(".csv", f"_{suffix}.csv")))
    if name == "fig4-ratios":
        for row, (_, traj, _) in zip(rows, runs):
            th, vth = estimate_interaction_ratios(traj)
            row["theta_hat"], row["vartheta_hat"] = th, vth
    if name == "fig8-entry-vs-eta":
        table = [[g["eta"], g["K"], "" if g["median_entry_curvature"] is None else g["median_entry_curvature"]]
                 for g in summary["groups"]]
        write_table(os.path.join(out_dir, "entry_vs_eta.csv"), ["eta", "K", "median_entry_curvature"], table)

    write_json(summary, os.path.join(out_dir, "summary.json"))
    return summary
