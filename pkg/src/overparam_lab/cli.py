"""Command line entry point: ``overparam-lab PRESET [options]``.

Exit status is 0 on success, 1 on a usage error and 2 on an I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ExperimentConfig
from .outputs import TrajectoryIOError
from .presets import PRESETS, THEORY_KEYS, preset_config, run_preset

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _list(cast):
    def parse(text):
        vals = [cast(v) for v in text.split(",") if v.strip()]
        return vals[0] if len(vals) == 1 else tuple(vals)
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="overparam-lab", description="Run a teacher-student gradient-descent preset.")
    p.add_argument("preset", choices=PRESETS)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--out", dest="out_dir", help="output directory (default: runs/<preset>)")
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--k", dest="K", type=_list(int), help="neuron count or comma list")
    p.add_argument("--eta", type=_list(float), help="step size or comma list")
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--init-scale", type=float)
    p.add_argument("--norm", dest="norm_w_star", type=float)
    p.add_argument("--mode", choices=("empirical", "population", "approximated"))
    p.add_argument("--theta", type=float)
    p.add_argument("--vartheta", type=float)
    p.add_argument("--stop-tol", type=float)
    p.add_argument("--record-stride", type=int)
    th = p.add_argument_group("theory-report")
    th.add_argument("--nu", type=float)
    th.add_argument("--gamma", type=float)
    th.add_argument("--w0-first", type=float)
    th.add_argument("--c1", type=float)
    th.add_argument("--c2", type=float)
    th.add_argument("--t", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = vars(parser.parse_args(argv))
        name = ns.pop("preset")
        verbose = ns.pop("verbose")
        config_path = ns.pop("config")
        theory_args = {k: ns.pop(k) for k in THEORY_KEYS if k in ns and ns[k] is not None}
        theory_args.update({k: ns[k] for k in ("theta", "vartheta") if ns.get(k) is not None})
        for k in THEORY_KEYS:
            ns.pop(k, None)
        overrides = {}
        if config_path:
            try:
                with open(config_path) as fh:
                    overrides.update(json.load(fh))
            except OSError as exc:
                print(f"overparam-lab: cannot read {config_path}: {exc}", file=sys.stderr)
                return EXIT_IO
        overrides.update({k: v for k, v in ns.items() if v is not None})
        out_dir = overrides.pop("out_dir", None) or f"runs/{name}"
        config = preset_config(name, overrides)
    except (UsageError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"overparam-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s")
    try:
        summary = run_preset(name, config, out_dir, theory_args)
    except (TrajectoryIOError, OSError) as exc:
        print(f"overparam-lab: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"overparam-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{name}: wrote outputs to {out_dir}")
    for g in summary.get("groups", []):
        print(
            f"  eta={g['eta']:g} K={g['K']}: median entry (curvature)={g['median_entry_curvature']} "
            f"converged={g['n_converged']}/{g['runs']} diverged={g['n_diverged']}"
        )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
