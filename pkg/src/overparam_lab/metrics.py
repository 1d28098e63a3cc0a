"""Progress diagnostics: distance to the optimal set, per-neuron geometry,
the interaction terms of the population dynamics, and benign-region timing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .model import Dataset, TeacherProblem
from .objective import hessian_quadratic_form, population_hessian_quadratic_form

if TYPE_CHECKING:
    from .trainer import Trajectory

__all__ = [
    "Alignment",
    "NeuronDecomposition",
    "InteractionComponents",
    "optimal_alignment",
    "distance_to_teacher",
    "decompose",
    "interaction_components",
    "interaction_arrays",
    "curvature_quantity",
    "entry_time",
    "estimate_interaction_ratios",
    "running_interaction_ratios",
]

RADICAND_TOL = 1e-10
RATIO_FLOOR = 1e-15


@dataclass(frozen=True)
class Alignment:
    q: np.ndarray
    degenerate: bool


@dataclass(frozen=True)
class NeuronDecomposition:
    parallel: float
    perp: np.ndarray

    @property
    def perp_norm(self) -> float:
        return float(np.linalg.norm(self.perp))


@dataclass(frozen=True)
class InteractionComponents:
    """Terms of one population step for one neuron: the next parallel
    component is ``A - B`` and the next perpendicular block is ``C - D``."""

    A: float
    B: float
    C: np.ndarray
    D: np.ndarray


def _require_canonical(teacher: TeacherProblem):
    if not teacher.is_canonical:
        raise ValueError("teacher must be canonical (w_star = ||w_star|| e_1)")


def optimal_alignment(W, teacher: TeacherProblem) -> Alignment:
    """Unit ``q`` maximising ``tr(W^T w* q^T)``: ``q = W^T w* / ||W^T w*||``.

    Falls back to ``e_1`` when ``W^T w* = 0``; every unit vector then gives
    the same distance.
    """
    W = np.asarray(W, dtype=float)
    a = W.T @ teacher.w_star
    na = np.linalg.norm(a)
    if na > 0:
        return Alignment(a / na, False)
    q = np.zeros(W.shape[1])
    q[0] = 1.0
    return Alignment(q, True)


def distance_to_teacher(W, teacher: TeacherProblem) -> float:
    """``min_{||q||=1} ||W - w* q^T||_F = sqrt(||W||_F^2 + ||w*||^2 - 2||W^T w*||)``."""
    W = np.asarray(W, dtype=float)
    rad = np.sum(W * W) + teacher.sq_norm - 2.0 * np.linalg.norm(W.T @ teacher.w_star)
    if rad < 0:
        if rad < -RADICAND_TOL:
            raise ArithmeticError(f"negative squared distance {rad}")
        rad = 0.0
    return float(np.sqrt(rad))


def decompose(W, teacher: TeacherProblem) -> list:
    """Per-neuron ``(<w_k, w*>, w_k[2:])`` for a canonical teacher."""
    _require_canonical(teacher)
    W = np.asarray(W, dtype=float)
    par = W.T @ teacher.w_star
    return [NeuronDecomposition(float(par[k]), W[1:, k].copy()) for k in range(W.shape[1])]


def interaction_arrays(W, teacher: TeacherProblem, eta: float):
    """Vectorised components: ``A``, ``B`` of shape (K,), ``C``, ``D`` of shape (d-1, K)."""
    _require_canonical(teacher)
    W = np.asarray(W, dtype=float)
    a = teacher.sq_norm
    p = W.T @ teacher.w_star
    Wp = W[1:, :]
    G = W.T @ W
    sq = np.diag(G).copy()
    others = np.sum(sq) - sq
    A = p * (1.0 + 3.0 * eta * (a - sq))
    B = 2.0 * eta * (G @ p - sq * p) + eta * p * others
    C = Wp * (1.0 + eta * (a - 3.0 * sq))
    D = 2.0 * eta * (Wp @ G - Wp * sq) + eta * Wp * others
    return A, B, C, D


def interaction_components(W, teacher: TeacherProblem, eta: float) -> list:
    A, B, C, D = interaction_arrays(W, teacher, eta)
    return [
        InteractionComponents(float(A[k]), float(B[k]), C[:, k].copy(), D[:, k].copy())
        for k in range(A.shape[0])
    ]


def curvature_quantity(W, teacher: TeacherProblem, data: Optional[Dataset] = None) -> float:
    """Hessian quadratic form along ``V = w* q*^T - W``.

    Uses the empirical Hessian when ``data`` is given, the population one
    otherwise.
    """
    W = np.asarray(W, dtype=float)
    q = optimal_alignment(W, teacher).q
    V = np.outer(teacher.w_star, q) - W
    if data is None:
        return population_hessian_quadratic_form(W, V, teacher)
    return hessian_quadratic_form(W, V, data)


def entry_time(traj: "Trajectory", criterion: str, *, gamma: float = None, nu: float = None):
    """First recorded iteration at which ``traj`` is inside a benign region.

    criterion
        ``"gamma"``: ``||w_t[1]| - ||w*||| <= gamma`` and ``||w_t^perp|| <= gamma``
        (single-neuron runs only).
        ``"nu"``: ``dist(W_t, w*) <= nu ||w*||``.
        ``"curvature"``: curvature quantity positive at this and every later
        record.

    Returns the iteration index ``t`` or ``None``.
    """
    t = traj.t
    if len(t) == 0:
        raise ValueError("empty trajectory")
    if criterion == "gamma":
        if traj.K != 1:
            raise ValueError("gamma criterion is defined for single-neuron runs")
        if gamma is None:
            raise ValueError("gamma required")
        norm = traj.norm_w_star
        first = np.abs(traj.parallel[:, 0]) / norm if norm > 0 else np.zeros(len(t))
        ok = (np.abs(first - norm) <= gamma) & (traj.perp_norm[:, 0] <= gamma)
    elif criterion == "nu":
        if nu is None:
            raise ValueError("nu required")
        ok = traj.dist <= nu * traj.norm_w_star
    elif criterion == "curvature":
        bad = np.flatnonzero(~(traj.curvature > 0))
        if len(bad) == 0:
            return int(t[0])
        last = bad[-1]
        return int(t[last + 1]) if last + 1 < len(t) else None
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    hits = np.flatnonzero(ok)
    return int(t[hits[0]]) if len(hits) else None


def _ratios(traj: "Trajectory"):
    A = np.abs(traj.compA)
    C = traj.compC_norm
    with np.errstate(divide="ignore", invalid="ignore"):
        rb = np.where(A >= RATIO_FLOOR, np.abs(traj.compB) / A, 0.0)
        rd = np.where(C >= RATIO_FLOOR, traj.compD_norm / C, 0.0)
    return rb.max(axis=1), rd.max(axis=1)


def estimate_interaction_ratios(traj: "Trajectory", until: Optional[int] = "entry"):
    """Largest ``|B|/|A|`` and ``||D||/||C||`` over neurons and records up to
    ``until`` (default: curvature entry time, or the whole run if never entered).

    Records whose denominator is below 1e-15 are skipped.
    """
    if until == "entry":
        until = entry_time(traj, "curvature")
    mask = np.ones(len(traj.t), bool) if until is None else traj.t <= until
    rb, rd = _ratios(traj)
    if not np.any(mask):
        return 0.0, 0.0
    return float(rb[mask].max()), float(rd[mask].max())


def running_interaction_ratios(traj: "Trajectory"):
    """Running maxima of the per-record ratios; element ``i`` covers records ``0..i``."""
    rb, rd = _ratios(traj)
    return np.maximum.accumulate(rb), np.maximum.accumulate(rd)
