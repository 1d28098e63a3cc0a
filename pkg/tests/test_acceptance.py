"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (or ``python tests/test_acceptance.py``);
the lines are also collected in the terminal summary.
"""
import filecmp
import math
import os
import sys
import time

import numpy as np
import pytest

from overparam_lab import (
    DynamicsMode,
    ExperimentConfig,
    check_local_strong_convexity,
    check_smoothness,
    distance_to_teacher,
    empirical_gradient,
    entry_time,
    estimate_interaction_ratios,
    gaussian_moment_oracle,
    gd_step,
    init_network,
    hessian_quadratic_form,
    linear_convergence_certificate,
    make_teacher,
    optimal_alignment,
    perp_decay_bound,
    population_gradient,
    population_hessian_quadratic_form,
    projection_aggregation_bound,
    run,
    run_preset,
    single_neuron_bounds,
)
from overparam_lab.metrics import running_interaction_ratios
from overparam_lab.model import derive_seed
from overparam_lab.presets import preset_config
from overparam_lab.trainer import make_problem
from oracles import (
    fd_gradient,
    loss_of,
    mc_mean_and_se,
    per_sample_gradients,
    random_instance,
    relative_error,
    second_difference,
)

pytestmark = pytest.mark.slow

FIG1_KS = (1, 3, 10)
FIG1_SEEDS = range(5)
POP_SLACK = 0.10
ROUNDING = 1e-12


def strictly_decreasing(values):
    return all(a is not None and b is not None and a > b for a, b in zip(values, values[1:]))


def fmt_entry(v):
    return "never" if v is None else f"{v:g}"


def median_or_none(values):
    m = float(np.median([math.inf if v is None else v for v in values]))
    return None if math.isinf(m) else m


# ---------------------------------------------------------------- criterion 1


def test_criterion_01_gradient_hessian_oracles(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_g = worst_h = 0.0
    for _ in range(100):
        _, data, W = random_instance(rng)
        V = rng.standard_normal(W.shape)
        worst_g = max(worst_g, relative_error(empirical_gradient(W, data), fd_gradient(loss_of(data), W)))
        want = second_difference(loss_of(data), W, V)
        worst_h = max(worst_h, relative_error(hessian_quadratic_form(W, V, data), want))
    elapsed = time.perf_counter() - start
    ok = worst_g <= 1e-6 and worst_h <= 1e-4 and elapsed < 60
    acceptance(1, ok, f"100 instances: max grad rel err {worst_g:.2e} (<=1e-6), "
                      f"max Hessian rel err {worst_h:.2e} (<=1e-4), {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- criterion 2


def test_criterion_02_population_identities(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(77)
    worst_grad = worst_hess = 0.0
    for i in range(10):
        d, K = int(rng.integers(3, 7)), int(rng.integers(1, 5))
        teacher = make_teacher(d, float(rng.uniform(0.5, 1.5)))
        W = rng.standard_normal((d, K)) * rng.uniform(0.3, 1.0)
        V = rng.standard_normal((d, K))

        def grad_draw(g, m):
            return per_sample_gradients(W, g.standard_normal((m, d)), teacher.w_star)

        def hess_draw(g, m):
            X = g.standard_normal((m, d))
            P, Q = X @ W, X @ V
            r = np.sum(P * P, 1) - (X @ teacher.w_star) ** 2
            return r * np.sum(Q * Q, 1) + 2 * np.sum(P * Q, 1) ** 2

        mean, se = mc_mean_and_se(grad_draw, np.random.default_rng([77, i, 0]), 1_000_000)
        worst_grad = max(worst_grad, float(np.max(np.abs(mean - population_gradient(W, teacher).ravel()) / se)))
        mean, se = mc_mean_and_se(hess_draw, np.random.default_rng([77, i, 1]), 1_000_000)
        worst_hess = max(worst_hess, float(abs(mean[0] - population_hessian_quadratic_form(W, V, teacher)) / se[0]))
    rep = gaussian_moment_oracle(rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal((4, 3)),
                                 rng.standard_normal((4, 3)), samples=1_000_000, seed=78)
    elapsed = time.perf_counter() - start
    moments = ", ".join(f"{c.name} z={c.max_z:.2f}" for c in rep.checks)
    ok = worst_grad <= 5 and worst_hess <= 5 and rep.passed and elapsed < 300
    acceptance(2, ok, f"10 instances x 1e6 samples: max z gradient {worst_grad:.2f}, Hessian {worst_hess:.2f}; "
                      f"moments: {moments}; {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------- fig1 preset grid (3 and 7)


def _worst_ratio(traj):
    """Where |B|/|A| peaks before entry: (t, |w^par| there, median |w^par| over neurons)."""
    entry = entry_time(traj, "curvature")
    m = traj.t <= entry if entry is not None else np.ones(len(traj.t), bool)
    A = np.abs(traj.compA[m])
    r = np.where(A >= 1e-15, np.abs(traj.compB[m]) / np.maximum(A, 1e-300), 0.0)
    i, k = np.unravel_index(np.argmax(r), r.shape)
    par = np.abs(traj.parallel[m][i])
    return int(traj.t[m][i]), float(par[k]), float(np.median(par))


@pytest.fixture(scope="module")
def fig1_grid():
    """Run the fig1 preset grid once at full resolution and keep per-run summaries."""
    start = time.perf_counter()
    rows = {}
    for K in FIG1_KS:
        for seed in FIG1_SEEDS:
            cfg = preset_config("fig1").replace(K=K, seed=seed, record_stride=1)
            traj = run(cfg)
            rows[K, seed] = dict(
                entry_curvature=entry_time(traj, "curvature"),
                entry_dist=entry_time(traj, "nu", nu=0.1),
                train=float(traj.train_loss[-1]),
                test=float(traj.test_loss[-1]),
                ratios=estimate_interaction_ratios(traj) if K == 10 else None,
                worst=_worst_ratio(traj) if K == 10 else None,
            )
            del traj
    return rows, time.perf_counter() - start


def test_criterion_03_width_ordering(acceptance, fig1_grid):
    rows, elapsed = fig1_grid
    med_curv = [median_or_none([rows[K, s]["entry_curvature"] for s in FIG1_SEEDS]) for K in FIG1_KS]
    med_dist = [median_or_none([rows[K, s]["entry_dist"] for s in FIG1_SEEDS]) for K in FIG1_KS]
    worst_train = {K: max(rows[K, s]["train"] for s in FIG1_SEEDS) for K in FIG1_KS}
    worst_test = {K: max(rows[K, s]["test"] for s in FIG1_SEEDS) for K in FIG1_KS}
    curv_ok = strictly_decreasing(med_curv)
    loss_ok = all(worst_train[K] < 1e-8 and worst_test[K] < 1e-8 for K in FIG1_KS)
    d10 = med_dist[-1]
    dist_ok = d10 is not None and all(v is None or d10 < v for v in med_dist[:-1])
    ok = curv_ok and loss_ok and dist_ok and elapsed < 600
    detail = (
        f"median curvature entry K=1,3,10: {', '.join(map(fmt_entry, med_curv))} "
        f"({'decreasing' if curv_ok else 'NOT decreasing'}); "
        f"worst final train/test loss: "
        + ", ".join(f"K={K} {worst_train[K]:.1e}/{worst_test[K]:.1e}" for K in FIG1_KS)
        + f" ({'all' if loss_ok else 'not all'} < 1e-8); "
        f"median dist<=0.1 entry: {', '.join(map(fmt_entry, med_dist))} "
        f"({'K=10 earliest' if dist_ok else 'K=10 not earliest'}); grid runtime {elapsed:.0f}s"
    )
    acceptance(3, ok, detail)
    assert ok


# ---------------------------------------------------------------- criterion 4


def test_criterion_04_single_neuron_entry_bound(acceptance):
    gamma, eta, d = 0.1, 0.001, 10
    teacher = make_teacher(d, 1.0)
    rng = np.random.default_rng(4)
    violations, worst_slack, measured = 0, math.inf, []
    for _ in range(20):
        # small-initialisation condition ||w0|| <= gamma / 10 caps |w0[1]| at 0.01
        first = rng.uniform(0.005, 0.0095) * rng.choice([-1.0, 1.0])
        perp = rng.standard_normal(d - 1)
        perp *= rng.uniform(0, math.sqrt(0.01 ** 2 - first ** 2)) / np.linalg.norm(perp)
        w0 = np.concatenate([[first], perp])[:, None]
        assert np.linalg.norm(w0) <= gamma / 10 and teacher.norm_w_star > 1.1 * gamma
        b = single_neuron_bounds(gamma, 1.0, first, eta)
        cfg = ExperimentConfig(K=1, d=d, eta=eta, iters=math.ceil(b.T_gamma_bound) + 1, mode="population",
                               stop_tol=None)
        traj = run(cfg, W0=w0, teacher=teacher)
        T = entry_time(traj, "gamma", gamma=gamma)
        measured.append(T)
        if T is None or T > b.T_gamma_bound:
            violations += 1
            continue
        worst_slack = min(worst_slack, b.T_gamma_bound - T)
        m = traj.t <= T
        growth = np.abs(traj.parallel[m, 0]) >= b.growth_rate ** traj.t[m] * abs(first)
        capped = traj.perp_norm[m, 0] <= gamma
        violations += int(np.sum(~growth) + np.sum(~capped))
    ok = violations == 0
    acceptance(4, ok, f"20 runs, |w0[1]| in [0.005, 0.0095]: measured T_gamma {min(measured)}..{max(measured)}, "
                      f"min bound slack {worst_slack:.0f} iters, violations {violations}")
    assert ok


# ---------------------------------------------------------------- criterion 5


def _direct_sq_dist(W, teacher):
    q = optimal_alignment(W, teacher).q
    E = W - np.outer(teacher.w_star, q)
    return float(np.sum(E * E))


def test_criterion_05_local_contraction(acceptance):
    teacher = make_teacher(10, 1.0)
    cert = linear_convergence_certificate(0.1, 0.001, 1.0)
    eta = min(0.001, cert.eta_cap)
    limit = 1.0 - eta * cert.margin + 1e-9
    budget = 100_000
    report, ok = [], True
    for K in FIG1_KS:
        worst, bad, steps = 0.0, 0, 0
        for seed in range(3):
            _, _, _, W = make_problem(ExperimentConfig(K=K, seed=seed))
            entered = False
            prev = None
            for t in range(budget):
                if not entered:
                    entered = distance_to_teacher(W, teacher) <= 0.1
                    if entered:
                        prev = _direct_sq_dist(W, teacher)
                W = gd_step(W, DynamicsMode.population(), eta, teacher)
                if entered:
                    cur = _direct_sq_dist(W, teacher)
                    # ratios are meaningless once the distance reaches rounding level
                    if prev < 1e-20:
                        break
                    ratio = cur / prev
                    worst = max(worst, ratio)
                    bad += ratio > limit
                    steps += 1
                    prev = cur
        ok &= bad == 0 and steps > 0
        report.append(f"K={K}: worst ratio {worst:.6f}, {bad}/{steps} post-entry steps above bound")
    acceptance(5, ok, f"eta={eta:g}, bound {limit:.6f}; " + "; ".join(report))
    assert ok


# ---------------------------------------------------------------- criterion 6


def _point_near_optimum(rng, teacher, K, nu):
    q = rng.standard_normal(K)
    q /= np.linalg.norm(q)
    H = rng.standard_normal((teacher.d, K))
    # ||W - w* q^T||_F <= nu ||w*|| bounds the distance to the optimum set
    return np.outer(teacher.w_star, q) + rng.uniform(0, 1) * nu * teacher.norm_w_star * H / np.linalg.norm(H)


def test_criterion_06_convexity_and_smoothness(acceptance):
    rng = np.random.default_rng(6)
    teacher = make_teacher(6, 1.0)
    strcvx_bad = smooth_bad = 0
    for i in range(1000):
        W = _point_near_optimum(rng, teacher, 3, 0.05)
        assert distance_to_teacher(W, teacher) <= 0.05 + 1e-12
        V = rng.standard_normal(W.shape)
        strcvx_bad += not check_local_strong_convexity(W, V, teacher, nu=0.05, slack=1e-9)
    for i in range(1000):
        W = _point_near_optimum(rng, teacher, 3, 0.1)
        smooth_bad += not check_smoothness(W, teacher, trials=1, seed=derive_seed(6, i), nu=0.1, slack=1e-9)
    ok = strcvx_bad == 0 and smooth_bad == 0
    acceptance(6, ok, f"strong convexity (nu=0.05): {strcvx_bad}/1000 violations; "
                      f"smoothness (nu=0.1): {smooth_bad}/1000 violations")
    assert ok


# ---------------------------------------------------------------- criterion 7


def test_criterion_07_interaction_negligible(acceptance, fig1_grid):
    rows, _ = fig1_grid
    thetas = [rows[10, s]["ratios"][0] for s in FIG1_SEEDS]
    varthetas = [rows[10, s]["ratios"][1] for s in FIG1_SEEDS]
    ok = max(thetas) <= 1e-2 and max(varthetas) <= 1e-2
    s = int(np.argmax(thetas))
    t, par, med = rows[10, s]["worst"]
    acceptance(7, ok, f"K=10, 5 seeds, pre-entry: max theta_hat {max(thetas):.2e} (seed {s}, t={t}, "
                      f"|w^par|={par:.1e} vs median {med:.1e}), max vartheta_hat {max(varthetas):.2e} (<= 1e-2)")
    assert ok


# ---------------------------------------------------------------- criterion 8


def _approximated_check(seed, theta, vartheta, K=10, iters=4000, eta=0.001):
    teacher = make_teacher(10, 1.0)
    w = init_network(10, 1, 0.01, seed)
    cfg = ExperimentConfig(K=1, eta=eta, iters=iters, mode="approximated", stop_tol=None)
    ref = run(cfg, W0=w, teacher=teacher)
    traj = run(cfg.replace(K=K, theta=theta, vartheta=vartheta), W0=np.repeat(w, K, axis=1), teacher=teacher)
    bad = checked = 0
    r0 = traj.perp_norm[0] / np.abs(traj.parallel[0])
    for i, t in enumerate(traj.t):
        agg = projection_aggregation_bound(t, theta, K, ref.parallel[i, 0])
        if not agg.vacuous:
            checked += 1
            bad += traj.agg_parallel[i] < agg.bound * (1 - ROUNDING)
        for k in range(K):
            pb = perp_decay_bound(t, theta, vartheta, eta, 1.0, r0[k], traj.parallel[i, k])
            checked += 1
            bad += traj.perp_norm[i, k] > pb.bound * (1 + ROUNDING)
    return bad, checked


def _population_check(seed, K, iters=4000, eta=0.001):
    teacher = make_teacher(10, 1.0)
    cfg = ExperimentConfig(K=K, eta=eta, iters=iters, mode="population", stop_tol=None, seed=seed)
    traj = run(cfg)
    W0 = make_problem(cfg)[3]
    # single-neuron reference started from the root-mean-square signal and perpendicular size
    w1 = np.zeros((10, 1))
    w1[0, 0] = np.sqrt(np.mean(W0[0] ** 2))
    u = W0[1:, 0] / np.linalg.norm(W0[1:, 0])
    w1[1:, 0] = np.sqrt(np.mean(np.sum(W0[1:] ** 2, axis=0))) * u
    ref = run(cfg.replace(K=1), W0=w1, teacher=teacher)
    rb, rd = running_interaction_ratios(traj)
    entry = entry_time(traj, "curvature")
    r0 = traj.perp_norm[0] / np.abs(traj.parallel[0])
    bad = checked = 0
    for i, t in enumerate(traj.t):
        if entry is not None and t > entry:
            break
        theta = rb[i - 1] if i > 0 else 0.0
        vartheta = rd[i - 1] if i > 0 else 0.0
        agg = projection_aggregation_bound(t, theta, K, ref.parallel[i, 0])
        if not agg.vacuous:
            checked += 1
            bad += traj.agg_parallel[i] < (1 - POP_SLACK) * agg.bound
        for k in range(K):
            pb = perp_decay_bound(t, theta, vartheta, eta, 1.0, r0[k], traj.parallel[i, k])
            checked += 1
            bad += traj.perp_norm[i, k] > (1 + POP_SLACK) * pb.bound
    return bad, checked


def test_criterion_08_projection_and_perp_bounds(acceptance):
    abad = achk = 0
    for seed in range(3):
        for theta, vartheta in ((1e-4, 1e-4), (1e-4, 0.0), (1e-3, 1e-3)):
            b, c = _approximated_check(seed, theta, vartheta)
            abad, achk = abad + b, achk + c
    pbad = pchk = 0
    for seed in range(3):
        for K in (3, 10):
            b, c = _population_check(seed, K)
            pbad, pchk = pbad + b, pchk + c
    ok = abad == 0 and pbad == 0
    acceptance(8, ok, f"approximated (zero slack): {abad}/{achk} violations; "
                      f"population (10% slack, running theta/vartheta): {pbad}/{pchk} violations")
    assert ok


# ---------------------------------------------------------------- criterion 9


def test_criterion_09_large_steps(acceptance):
    converged = []
    for eta in (1.0, 0.5, 0.4, 0.3):
        for K in FIG1_KS:
            for seed in FIG1_SEEDS:
                cfg = preset_config("fig1").replace(K=K, seed=seed, eta=eta, record_stride=1000)
                traj = run(cfg)
                if not traj.diverged and traj.train_loss[-1] < 1e-8:
                    converged.append(f"eta={eta:g} K={K} seed={seed}")
    entries, small_ok = [], True
    for K in FIG1_KS:
        es = []
        for seed in FIG1_SEEDS:
            traj = run(preset_config("fig1").replace(K=K, seed=seed, eta=0.2, record_stride=1))
            small_ok &= (not traj.diverged) and traj.train_loss[-1] < 1e-8
            es.append(entry_time(traj, "curvature"))
        entries.append(median_or_none(es))
    order_ok = strictly_decreasing(entries)
    ok = not converged and small_ok and order_ok
    acceptance(9, ok, f"large steps converged: {len(converged)}/60 ({'; '.join(converged) or 'none'}); "
                      f"eta=0.2 all converge: {small_ok}; median entry K=1,3,10 at eta=0.2: "
                      f"{', '.join(map(fmt_entry, entries))} ({'ordered' if order_ok else 'not ordered'})")
    assert ok


# --------------------------------------------------------------- criterion 10


def test_criterion_10_determinism(acceptance, tmp_path):
    cfg = preset_config("fig1", {"iters": 3000, "trials": 2})
    a, b = tmp_path / "a", tmp_path / "b"
    run_preset("fig1", cfg, a)
    run_preset("fig1", cfg, b)
    names = sorted(os.listdir(a))
    same = names == sorted(os.listdir(b))
    _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    ok = same and not mismatch and not errors
    acceptance(10, ok, f"{len(names)} files compared byte for byte, {len(mismatch) + len(errors)} differ")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
