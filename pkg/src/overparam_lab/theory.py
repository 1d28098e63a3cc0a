"""Closed-form rates, bounds and moment identities as checkable numbers.

The smoothness constant is ``15 + 16 nu^2``, the value established by the
smoothness argument for the population Hessian.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .metrics import distance_to_teacher, optimal_alignment
from .model import TeacherProblem, _rng
from .objective import population_hessian_quadratic_form

__all__ = [
    "SMOOTH_CONST",
    "DEFAULT_STEP_CONSTANT",
    "LinearCertificate",
    "SingleNeuronBounds",
    "TifCheck",
    "AggregationBound",
    "PerpBound",
    "GapBound",
    "MomentCheck",
    "MomentReport",
    "TheoryReport",
    "convexity_margin",
    "decay_factor",
    "linear_convergence_certificate",
    "check_local_strong_convexity",
    "check_smoothness",
    "single_neuron_bounds",
    "tif_condition",
    "projection_aggregation_bound",
    "perp_decay_bound",
    "overparam_gap_bound",
    "gaussian_moment_oracle",
    "monte_carlo_mean",
    "theory_report",
]

SMOOTH_CONST = 15.0
# the step-size constant c in eta <= c / ||w*||^2 is never pinned down; 0.1 by default
DEFAULT_STEP_CONSTANT = 0.1


def convexity_margin(nu: float) -> float:
    """``2 - 14 nu - 2 nu^2``; positive for ``0 <= nu < 0.14005``."""
    return 2.0 - 14.0 * nu - 2.0 * nu * nu


class LinearCertificate(NamedTuple):
    contraction_factor: float
    eta_cap: float
    margin: float


def linear_convergence_certificate(nu, eta, norm_w_star, smooth_const=SMOOTH_CONST):
    """Per-step contraction of ``dist^2`` and the step-size cap near the optimum.

    Returns ``(1 - eta * m, m / ((smooth_const + 16 nu^2)^2 ||w*||^4), m)``
    with ``m = 2 - 14 nu - 2 nu^2``.
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    m = convexity_margin(nu)
    if not m > 0:
        raise ValueError(f"nu={nu} gives a nonpositive convexity margin {m:.6g}")
    if not norm_w_star > 0:
        raise ValueError("teacher norm must be positive")
    cap = m / ((smooth_const + 16.0 * nu * nu) ** 2 * norm_w_star ** 4)
    return LinearCertificate(1.0 - eta * m, cap, m)


def _nu_of(W, teacher, nu):
    if nu is not None:
        return nu
    return distance_to_teacher(W, teacher) / teacher.norm_w_star


def check_local_strong_convexity(W, V, teacher: TeacherProblem, nu=None, slack=1e-9) -> bool:
    """Does ``vec(V)^T grad^2 F(W) vec(V) >= 2 tr(q w*^T V q w*^T V)
    + (2 - 14 nu - 2 nu^2) ||w*||^2 ||V||_F^2`` hold (up to ``slack``)?

    ``nu`` defaults to ``dist(W, w*) / ||w*||``.
    """
    W = np.asarray(W, dtype=float)
    V = np.asarray(V, dtype=float)
    nu = _nu_of(W, teacher, nu)
    q = optimal_alignment(W, teacher).q
    s = teacher.w_star @ V @ q
    lower = 2.0 * s * s + convexity_margin(nu) * teacher.sq_norm * np.sum(V * V)
    return bool(population_hessian_quadratic_form(W, V, teacher) >= lower - slack)


def check_smoothness(W, teacher: TeacherProblem, trials: int, seed=0, nu=None, slack=1e-9) -> bool:
    """Random unit-Frobenius directions never exceed ``(15 + 16 nu^2) ||w*||^2``."""
    if trials < 1:
        raise ValueError("trials must be positive")
    W = np.asarray(W, dtype=float)
    nu = _nu_of(W, teacher, nu)
    bound = (SMOOTH_CONST + 16.0 * nu * nu) * teacher.sq_norm
    rng = _rng(seed)
    for _ in range(trials):
        V = rng.standard_normal(W.shape)
        V /= np.linalg.norm(V)
        if population_hessian_quadratic_form(W, V, teacher) > bound + slack:
            return False
    return True


@dataclass(frozen=True)
class SingleNeuronBounds:
    delta: float
    T_gamma_bound: float
    envelope: Callable[[float], float]
    growth_rate: float


def single_neuron_bounds(gamma, norm_w_star, w0_first, eta, c=DEFAULT_STEP_CONSTANT):
    """Entry-time bound and distance envelope for a single student neuron.

    ``Delta = 6 gamma (||w*|| - gamma)``, ``T_gamma <= log((||w*|| - gamma) /
    |w0[1]|) / log(1 + eta Delta)`` and, for ``t <= T_gamma``,
    ``dist^2 <= max(gamma^2, (||w*|| - |w0[1]| (1 + eta Delta)^t)^2) + gamma^2``.

    Raises
    ------
    ValueError
        If ``||w*|| <= 1.1 gamma``, ``w0_first == 0`` or ``eta > c / ||w*||^2``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if not norm_w_star > 1.1 * gamma:
        raise ValueError(f"strong-signal condition fails: ||w*||={norm_w_star} <= 1.1*gamma")
    if w0_first == 0:
        raise ValueError("initial signal w0[1] must be nonzero")
    if not 0 < eta <= c / norm_w_star ** 2:
        raise ValueError(f"step {eta} exceeds c/||w*||^2 = {c / norm_w_star ** 2}")
    delta = 6.0 * gamma * (norm_w_star - gamma)
    rate = 1.0 + eta * delta
    s0 = abs(w0_first)
    T = math.log((norm_w_star - gamma) / s0) / math.log(rate)

    def envelope(t):
        gap = norm_w_star - s0 * rate ** t
        return max(gamma * gamma, gap * gap) + gamma * gamma

    return SingleNeuronBounds(delta, T, envelope, rate)


class TifCheck(NamedTuple):
    holds: bool
    t_star: float
    lhs: float
    rhs: float


def tif_condition(gamma, norm_w_star, w0_first, eta) -> TifCheck:
    """Sufficient step-size condition keeping ``||w_t^perp|| <= gamma``:
    ``eta t* ||w*||^2 <= 3 eta w0[1]^2 ((1+eta Delta)^{2t*} - 1) / ((1+eta Delta)^2 - 1) + 9/10``
    with ``t* = log(||w*||^2 / (3 w0[1]^2)) / (2 log((1 + 2 eta ||w*||^2)^2))``.
    """
    a = norm_w_star ** 2
    delta = 6.0 * gamma * (norm_w_star - gamma)
    t_star = 0.5 * math.log(a / (3.0 * w0_first ** 2)) / math.log((1.0 + 2.0 * eta * a) ** 2)
    g2 = (1.0 + eta * delta) ** 2
    lhs = eta * t_star * a
    rhs = 3.0 * eta * w0_first ** 2 * (g2 ** t_star - 1.0) / (g2 - 1.0) + 0.9
    return TifCheck(lhs <= rhs, t_star, lhs, rhs)


class AggregationBound(NamedTuple):
    bound: float
    vacuous: bool


def projection_aggregation_bound(t, theta, K, w11_parallel_t) -> AggregationBound:
    """Predicted floor ``sqrt(1 - 2 t theta) sqrt(K) |w11_parallel_t|`` for
    ``sqrt(sum_k |w_k^par|^2)``; vacuous (0) once ``2 t theta >= 1``."""
    if K < 1 or t < 0 or theta < 0:
        raise ValueError("need K >= 1, t >= 0, theta >= 0")
    slack = 1.0 - 2.0 * t * theta
    if slack <= 0:
        return AggregationBound(0.0, True)
    return AggregationBound(math.sqrt(slack) * math.sqrt(K) * abs(w11_parallel_t), False)


class PerpBound(NamedTuple):
    bound: float
    psi: float
    decays: bool


def decay_factor(theta, vartheta, eta, norm_w_star) -> float:
    """``psi = (1 - theta - vartheta - theta vartheta)(1 + eta ||w*||^2)``."""
    return (1.0 - theta - vartheta - theta * vartheta) * (1.0 + eta * norm_w_star ** 2)


def perp_decay_bound(t, theta, vartheta, eta, norm_w_star, init_ratio, parallel_t) -> PerpBound:
    """Predicted ceiling ``|parallel_t| * init_ratio / psi^t`` on a neuron's
    perpendicular norm, where ``init_ratio = ||w0^perp|| / |w0^par|``.

    ``decays`` is False when ``psi <= 1`` (no shrinking of the
    perpendicular-to-parallel ratio is guaranteed).
    """
    if not 0 < eta <= 1.0 / (3.0 * norm_w_star ** 2):
        raise ValueError(f"step {eta} exceeds 1/(3||w*||^2)")
    psi = decay_factor(theta, vartheta, eta, norm_w_star)
    return PerpBound(abs(parallel_t) * init_ratio / psi ** t, psi, psi > 1.0)


class GapBound(NamedTuple):
    gap_lower_bound: float
    K_increasing_max: float
    K_positive_max: Optional[int]
    condition_star_holds: bool


def overparam_gap_bound(c1, c2, t, theta, K, norm_w_star) -> GapBound:
    """Lower bound on ``dist^2(W^{#1}_t) - dist^2(W^{#K}_t)`` and the ranges of
    ``K`` over which it grows and stays positive.

    ``c1`` is defined through ``|w11_parallel_t| = c1 ||w*||^2``.
    """
    if not 0 < c1 < 1:
        raise ValueError("c1 must lie in (0, 1)")
    beta = 1.0 - 2.0 * t * theta
    if beta <= 0:
        raise ValueError("2 t theta must be < 1")
    sb = math.sqrt(beta)
    s = c1 * c1 + c2 * c2
    gap = norm_w_star ** 2 * (2.0 * c1 * (sb * math.sqrt(K) - 1.0) - K * s + c1 * c1)
    k_inc = (c1 * sb / s) ** 2
    star = 2.0 * c1 * (math.sqrt(2.0) * sb - 1.0) - c1 * c1 - 2.0 * c2 * c2 > 0
    rad = c1 * c1 * beta - s * (2.0 * c1 - c1 * c1)
    k_pos = math.floor((c1 * sb + math.sqrt(rad)) / s) ** 2 if rad >= 0 else None
    return GapBound(gap, k_inc, k_pos, star)


def monte_carlo_mean(fn, d, samples, seed, batch=100_000):
    """Mean and standard error of ``fn(X)`` over ``samples`` Gaussian rows.

    ``fn`` maps an (m, d) batch to an (m, ...) array of per-sample values.
    """
    rng = _rng(seed)
    total = sq = None
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        vals = np.asarray(fn(rng.standard_normal((m, d))), dtype=float)
        s1, s2 = vals.sum(axis=0), (vals * vals).sum(axis=0)
        total = s1 if total is None else total + s1
        sq = s2 if sq is None else sq + s2
        done += m
    mean = total / samples
    var = np.maximum(sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return mean, np.sqrt(var / samples)


@dataclass(frozen=True)
class MomentCheck:
    name: str
    estimate: np.ndarray
    stderr: np.ndarray
    closed_form: np.ndarray
    max_z: float
    passed: bool


@dataclass(frozen=True)
class MomentReport:
    checks: tuple
    samples: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> MomentCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def gaussian_moment_oracle(u, v, V, W, samples=1_000_000, seed=0, z_tol=5.0) -> MomentReport:
    """Monte-Carlo check of four Gaussian moment identities for ``x ~ N(0, I)``.

    - ``E[(x^T u)^3 x] = 3 ||u||^2 u``
    - ``E[(x^T u)^2 (x^T v) x] = 2 (u^T v) u + ||u||^2 v``
    - ``E[||x^T V||^2 ||x^T W||^2] = ||V||_F^2 ||W||_F^2 + 2 ||V^T W||_F^2``
    - ``E[(x^T W V^T x)^2] = tr(W^T V)^2 + tr(W^T V W^T V) + ||W V^T||_F^2``
    """
    u, v = np.asarray(u, float), np.asarray(v, float)
    V, W = np.asarray(V, float), np.asarray(W, float)
    d = u.shape[0]
    if v.shape != (d,) or V.shape[0] != d or W.shape != V.shape:
        raise ValueError("incompatible shapes")

    def per_sample(X):
        xu, xv = X @ u, X @ v
        XV, XW = X @ V, X @ W
        nv = np.einsum("ij,ij->i", XV, XV)
        nw = np.einsum("ij,ij->i", XW, XW)
        cross = np.einsum("ij,ij->i", XW, XV)
        return np.concatenate(
            [(xu ** 3)[:, None] * X, (xu * xu * xv)[:, None] * X, (nv * nw)[:, None], (cross * cross)[:, None]],
            axis=1,
        )

    mean, se = monte_carlo_mean(per_sample, d, samples, seed)
    WtV = W.T @ V
    closed = [
        3.0 * (u @ u) * u,
        2.0 * (u @ v) * u + (u @ u) * v,
        np.array([np.sum(V * V) * np.sum(W * W) + 2.0 * np.sum((V.T @ W) ** 2)]),
        np.array([np.trace(WtV) ** 2 + np.sum(WtV * WtV.T) + np.sum((W @ V.T) ** 2)]),
    ]
    names = ["cubic", "mixed_cubic", "quartic_norms", "quadratic_form_sq"]
    spans = [(0, d), (d, 2 * d), (2 * d, 2 * d + 1), (2 * d + 1, 2 * d + 2)]
    checks = []
    for name, (lo, hi), cf in zip(names, spans, closed):
        est, err = mean[lo:hi], se[lo:hi]
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(err > 0, np.abs(est - cf) / err, np.where(est == cf, 0.0, np.inf))
        mz = float(np.max(z))
        checks.append(MomentCheck(name, est, err, cf, mz, mz <= z_tol))
    return MomentReport(tuple(checks), samples)


@dataclass(frozen=True)
class TheoryReport:
    nu: float
    margin: float
    contraction_factor: float
    eta_cap: float
    eta: float
    norm_w_star: float
    gamma: float
    w0_first: float
    delta: float
    T_gamma_bound: float
    tif_holds: bool
    psi: float
    psi_decays: bool
    c1: float
    c2: float
    t: int
    theta: float
    vartheta: float
    K: int
    gap_lower_bound: float
    K_increasing_max: float
    K_positive_max: Optional[int]
    condition_star_holds: bool
    aggregation_factor: float

    def to_dict(self) -> dict:
        return asdict(self)


def theory_report(
    nu=0.1,
    eta=0.001,
    norm_w_star=1.0,
    gamma=0.1,
    w0_first=0.01,
    c1=0.1,
    c2=0.01,
    t=0,
    theta=0.0,
    vartheta=0.0,
    K=10,
    c=DEFAULT_STEP_CONSTANT,
) -> TheoryReport:
    """Evaluate every closed-form quantity for one configuration."""
    cert = linear_convergence_certificate(nu, eta, norm_w_star)
    single = single_neuron_bounds(gamma, norm_w_star, w0_first, eta, c)
    tif = tif_condition(gamma, norm_w_star, w0_first, eta)
    psi = decay_factor(theta, vartheta, eta, norm_w_star)
    gap = overparam_gap_bound(c1, c2, t, theta, K, norm_w_star)
    agg = projection_aggregation_bound(t, theta, K, 1.0)
    return TheoryReport(
        nu=nu,
        margin=cert.margin,
        contraction_factor=cert.contraction_factor,
        eta_cap=cert.eta_cap,
        eta=eta,
        norm_w_star=norm_w_star,
        gamma=gamma,
        w0_first=w0_first,
        delta=single.delta,
        T_gamma_bound=single.T_gamma_bound,
        tif_holds=tif.holds,
        psi=psi,
        psi_decays=psi > 1.0,
        c1=c1,
        c2=c2,
        t=t,
        theta=theta,
        vartheta=vartheta,
        K=K,
        gap_lower_bound=gap.gap_lower_bound,
        K_increasing_max=gap.K_increasing_max,
        K_positive_max=gap.K_positive_max,
        condition_star_holds=gap.condition_star_holds,
        aggregation_factor=agg.bound,
    )
