"""Gradient descent on the over-parametrised objective with per-step diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .metrics import interaction_arrays, optimal_alignment
from .model import (
    Dataset,
    TeacherProblem,
    derive_seed,
    init_network,
    make_teacher,
    sample_dataset,
)
from .objective import (
    empirical_gradient,
    population_gradient,
    population_hessian_quadratic_form,
    population_loss,
    residuals,
)

__all__ = [
    "DynamicsMode",
    "DivergenceError",
    "IterationRecord",
    "Trajectory",
    "gd_step",
    "run",
    "make_problem",
    "TRAIN_STREAM",
    "TEST_STREAM",
    "INIT_STREAM",
]

TRAIN_STREAM, TEST_STREAM, INIT_STREAM = 0, 1, 2

CONVERGED = "converged"
DIVERGED = "diverged"
COMPLETED = "completed"


class DivergenceError(FloatingPointError):
    """Raised when a step produces non-finite weights."""


@dataclass(frozen=True)
class DynamicsMode:
    """``empirical``, ``population`` or ``approximated`` (with damping
    ``theta`` on the parallel factor and inflation ``vartheta`` on the
    perpendicular factor)."""

    kind: str = "empirical"
    theta: float = 0.0
    vartheta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("empirical", "population", "approximated"):
            raise ValueError(f"unknown dynamics {self.kind!r}")
        if not (0 <= self.theta < 1 and 0 <= self.vartheta < 1):
            raise ValueError("theta and vartheta must lie in [0, 1)")

    @classmethod
    def empirical(cls):
        return cls("empirical")

    @classmethod
    def population(cls):
        return cls("population")

    @classmethod
    def approximated(cls, theta=0.0, vartheta=0.0):
        return cls("approximated", theta, vartheta)


def _approximated_step(W, teacher: TeacherProblem, eta, theta, vartheta):
    # decoupled per-neuron magnitudes; signs/directions carried by the factors
    if not teacher.is_canonical:
        raise ValueError("approximated dynamics need a canonical teacher")
    a = teacher.sq_norm
    sq = np.einsum("dk,dk->k", W, W)
    out = W.copy()
    out[0, :] *= (1.0 - theta) * (1.0 + 3.0 * eta * (a - sq))
    out[1:, :] *= (1.0 + vartheta) * (1.0 + eta * (a - 3.0 * sq))
    return out


def gd_step(W, mode: DynamicsMode, eta: float, context) -> np.ndarray:
    """One gradient-descent step.

    ``context`` is a :class:`Dataset` for empirical dynamics and a
    :class:`TeacherProblem` otherwise.

    Raises
    ------
    DivergenceError
        If the new weights are not finite.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    W = np.asarray(W, dtype=float)
    if mode.kind == "empirical":
        if not isinstance(context, Dataset):
            raise TypeError("empirical dynamics need a Dataset")
        with np.errstate(over="ignore", invalid="ignore"):
            new = W - eta * empirical_gradient(W, context)
    else:
        if not isinstance(context, TeacherProblem):
            raise TypeError(f"{mode.kind} dynamics need a TeacherProblem")
        with np.errstate(over="ignore", invalid="ignore"):
            if mode.kind == "population":
                new = W - eta * population_gradient(W, context)
            else:
                new = _approximated_step(W, context, eta, mode.theta, mode.vartheta)
    if not np.all(np.isfinite(new)):
        raise DivergenceError("gradient step produced non-finite weights")
    return new


@dataclass(frozen=True)
class IterationRecord:
    t: int
    train_loss: float
    test_loss: float
    dist: float
    curvature: float
    parallel: np.ndarray
    perp_norm: np.ndarray
    compA: np.ndarray
    compB: np.ndarray
    compC_norm: np.ndarray
    compD_norm: np.ndarray
    agg_parallel: float
    frob_sq: float


# per-record scalars and per-neuron arrays, in CSV order
SCALAR_FIELDS = ("train_loss", "test_loss", "dist", "curvature", "frob_sq", "agg_parallel")
NEURON_FIELDS = ("parallel", "perp_norm", "compA", "compB", "compC_norm", "compD_norm")


@dataclass
class Trajectory:
    """Columnar record of a run; row ``i`` describes iterate ``t[i]``.

    Scalar diagnostics have shape (N,), per-neuron ones (N, K).  Components
    A-D at row ``i`` describe the step from ``t[i]`` to ``t[i] + 1``.
    """

    t: np.ndarray
    train_loss: np.ndarray
    test_loss: np.ndarray
    dist: np.ndarray
    curvature: np.ndarray
    frob_sq: np.ndarray
    agg_parallel: np.ndarray
    parallel: np.ndarray
    perp_norm: np.ndarray
    compA: np.ndarray
    compB: np.ndarray
    compC_norm: np.ndarray
    compD_norm: np.ndarray
    K: int
    eta: float
    norm_w_star: float
    status: str = COMPLETED
    stopped_at: Optional[int] = None
    W_final: Optional[np.ndarray] = None
    config: Optional[ExperimentConfig] = None

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> IterationRecord:
        return IterationRecord(
            t=int(self.t[i]),
            **{f: float(getattr(self, f)[i]) for f in SCALAR_FIELDS},
            **{f: getattr(self, f)[i].copy() for f in NEURON_FIELDS},
        )

    @property
    def records(self) -> list:
        return [self[i] for i in range(len(self))]

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def diverged(self) -> bool:
        return self.status == DIVERGED


class _Recorder:
    def __init__(self, K, capacity):
        self.rows = 0
        self.t = np.empty(capacity, dtype=np.int64)
        self.scalars = {f: np.empty(capacity) for f in SCALAR_FIELDS}
        self.neurons = {f: np.empty((capacity, K)) for f in NEURON_FIELDS}

    def add(self, t, scalars, neurons):
        i = self.rows
        if i == len(self.t):
            self._grow()
        self.t[i] = t
        for f, v in scalars.items():
            self.scalars[f][i] = v
        for f, v in neurons.items():
            self.neurons[f][i] = v
        self.rows += 1

    def _grow(self):
        self.t = np.resize(self.t, 2 * len(self.t))
        for f in SCALAR_FIELDS:
            self.scalars[f] = np.resize(self.scalars[f], 2 * len(self.scalars[f]))
        for f in NEURON_FIELDS:
            arr = self.neurons[f]
            self.neurons[f] = np.resize(arr, (2 * arr.shape[0], arr.shape[1]))

    def arrays(self):
        n = self.rows
        out = {"t": self.t[:n].copy()}
        out.update({f: v[:n].copy() for f, v in self.scalars.items()})
        out.update({f: v[:n].copy() for f, v in self.neurons.items()})
        return out


def _diagnostics(W, teacher, eta, mode, data, test_data, P=None, r=None):
    ws = teacher.w_star
    par = W.T @ ws
    agg = float(np.linalg.norm(par))
    frob = float(np.sum(W * W))
    rad = frob + teacher.sq_norm - 2.0 * agg
    dist = float(np.sqrt(rad)) if rad > 0 else 0.0
    q = optimal_alignment(W, teacher).q
    V = np.outer(ws, q) - W
    if mode.kind == "empirical":
        if r is None:
            P, r = residuals(W, data)
        train = float(np.sum(r * r) / (4 * data.n))
        Q = data.X @ V
        cross = np.einsum("ik,ik->i", P, Q)
        curv = float(np.sum(r * np.einsum("ik,ik->i", Q, Q) + 2.0 * cross * cross) / data.n)
    else:
        train = population_loss(W, teacher)
        curv = population_hessian_quadratic_form(W, V, teacher)
    if test_data is not None:
        _, rt = residuals(W, test_data)
        test = float(np.sum(rt * rt) / (4 * test_data.n))
    else:
        test = population_loss(W, teacher) if mode.kind == "empirical" else train
    A, B, C, D = interaction_arrays(W, teacher, eta)
    scalars = dict(
        train_loss=train, test_loss=test, dist=dist, curvature=curv,
        frob_sq=frob, agg_parallel=agg,
    )
    neurons = dict(
        parallel=par,
        perp_norm=np.linalg.norm(W[1:, :], axis=0),
        compA=A,
        compB=B,
        compC_norm=np.linalg.norm(C, axis=0),
        compD_norm=np.linalg.norm(D, axis=0),
    )
    return scalars, neurons


def make_problem(config: ExperimentConfig):
    """Teacher, training set, test set and initial weights for ``config``.

    Train data, test data and initial weights use independent child streams
    of ``config.seed``; data do not depend on ``K`` or ``eta``.
    """
    teacher = make_teacher(config.d, config.norm_w_star)
    data = sample_dataset(teacher, config.n, derive_seed(config.seed, TRAIN_STREAM))
    test = (
        sample_dataset(teacher, config.n_test, derive_seed(config.seed, TEST_STREAM))
        if config.n_test > 0
        else None
    )
    K = config.K if not isinstance(config.K, tuple) else None
    if K is None:
        raise ValueError("make_problem needs a scalar K; use config.expand()")
    W0 = init_network(config.d, K, config.init_scale, derive_seed(config.seed, INIT_STREAM))
    return teacher, data, test, W0


def run(
    config: ExperimentConfig,
    *,
    W0=None,
    teacher: TeacherProblem = None,
    data: Dataset = None,
    test_data: Dataset = None,
) -> Trajectory:
    """Run ``config.iters`` steps of gradient descent and record diagnostics.

    Problem pieces not passed explicitly are generated from ``config.seed``.
    The run stops early when the training loss drops below ``config.stop_tol``
    (status ``"converged"``) or when a weight becomes non-finite or exceeds
    ``config.diverge_threshold`` in magnitude (status ``"diverged"``; the
    offending iterate is not recorded).  The last iterate is always recorded.
    """
    if isinstance(config.K, tuple) or isinstance(config.eta, tuple):
        raise ValueError("run needs scalar K and eta; use config.expand()")
    mode = DynamicsMode(config.mode, config.theta, config.vartheta)
    empirical = mode.kind == "empirical"
    if teacher is None or W0 is None or (empirical and data is None):
        t_, d_, te_, w_ = make_problem(config)
        teacher = teacher if teacher is not None else t_
        W0 = W0 if W0 is not None else w_
        if empirical and data is None:
            data = d_
            test_data = te_ if test_data is None else test_data
    if not empirical:
        data = None
    if not teacher.is_canonical:
        raise ValueError("diagnostics need a canonical teacher")
    W = np.array(W0, dtype=float)
    if W.shape != (teacher.d, config.K):
        raise ValueError(f"W0 shape {W.shape} does not match (d, K) = ({teacher.d}, {config.K})")

    eta = float(config.eta)
    T = int(config.iters)
    stride = config.record_stride
    rec = _Recorder(config.K, min(T // stride + 2, 1 << 16))
    status, stopped_at = COMPLETED, None
    tol = config.stop_tol
    X = data.X if data is not None else None

    t = 0
    while True:
        P = r = None
        if mode.kind == "empirical":
            P, r = residuals(W, data)
            loss = float(np.sum(r * r) / (4 * data.n))
        else:
            loss = None
        last = t == T
        if tol is not None and loss is None:
            loss = population_loss(W, teacher)
        hit = tol is not None and loss < tol
        if t % stride == 0 or last or hit:
            rec.add(t, *_diagnostics(W, teacher, eta, mode, data, test_data, P, r))
        if hit:
            status, stopped_at = CONVERGED, t
            break
        if last:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            if mode.kind == "empirical":
                W_next = W - eta * (X.T @ (r[:, None] * P) / data.n)
            elif mode.kind == "population":
                W_next = W - eta * population_gradient(W, teacher)
            else:
                W_next = _approximated_step(W, teacher, eta, config.theta, config.vartheta)
        t += 1
        if not np.all(np.isfinite(W_next)) or np.max(np.abs(W_next)) > config.diverge_threshold:
            if rec.t[rec.rows - 1] != t - 1:
                rec.add(t - 1, *_diagnostics(W, teacher, eta, mode, data, test_data, P, r))
            status, stopped_at = DIVERGED, t
            break
        W = W_next

    return Trajectory(
        **rec.arrays(),
        K=config.K,
        eta=eta,
        norm_w_star=teacher.norm_w_star,
        status=status,
        stopped_at=stopped_at,
        W_final=W,
        config=config,
    )
