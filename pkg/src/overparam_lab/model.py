"""Teacher problems, Gaussian datasets and student initialisation.

Every random draw goes through :func:`numpy.random.default_rng` (PCG64 bit
generator, ziggurat normal transform), so a given integer seed reproduces the
same arrays on every platform running the same NumPy major version.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TeacherProblem",
    "Dataset",
    "make_teacher",
    "make_teacher_from_vector",
    "sample_dataset",
    "init_network",
    "derive_seed",
]


@dataclass(frozen=True)
class TeacherProblem:
    """A single quadratic-activation teacher neuron ``w_star``."""

    w_star: np.ndarray
    d: int = field(init=False)
    norm_w_star: float = field(init=False)

    def __post_init__(self):
        w = np.array(self.w_star, dtype=float)
        if w.ndim != 1:
            raise ValueError("w_star must be a vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("w_star must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w_star", w)
        object.__setattr__(self, "d", w.shape[0])
        object.__setattr__(self, "norm_w_star", float(np.linalg.norm(w)))

    @property
    def is_canonical(self) -> bool:
        """True when ``w_star = ||w_star|| e_1`` with a nonnegative first entry."""
        return bool(self.w_star[0] >= 0 and not np.any(self.w_star[1:]))

    @property
    def sq_norm(self) -> float:
        return self.norm_w_star ** 2


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``X`` (n x d) and labels ``y_i = (x_i^T w_star)^2``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(f"incompatible shapes X{X.shape}, y{y.shape}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def derive_seed(seed: int, *stream: int) -> np.random.SeedSequence:
    """Independent child stream of ``seed`` addressed by integer tags."""
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.SeedSequence([int(seed), *map(int, stream)])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.default_rng(int(seed))


def make_teacher(d: int, norm: float = 1.0) -> TeacherProblem:
    """Canonical teacher ``w_star = norm * e_1`` in ``R^d``.

    Raises
    ------
    ValueError
        If ``d < 2`` (no perpendicular block) or ``norm < 0``.
    """
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    if not np.isfinite(norm) or norm < 0:
        raise ValueError(f"teacher norm must be nonnegative, got {norm}")
    w = np.zeros(int(d))
    w[0] = norm
    return TeacherProblem(w)


def make_teacher_from_vector(w_star) -> TeacherProblem:
    """Teacher with an arbitrary direction (diagnostics assume canonical form)."""
    w = np.asarray(w_star, dtype=float)
    if w.ndim != 1 or w.shape[0] < 2:
        raise ValueError("w_star must be a vector of length >= 2")
    return TeacherProblem(w)


def sample_dataset(teacher: TeacherProblem, n: int, seed) -> Dataset:
    """Draw ``n`` standard-normal design vectors and their quadratic labels."""
    if int(n) != n or n < 1:
        raise ValueError(f"sample count must be a positive integer, got {n}")
    X = _rng(seed).standard_normal((int(n), teacher.d))
    y = (X @ teacher.w_star) ** 2
    return Dataset(X, y)


def init_network(d: int, K: int, scale: float, seed) -> np.ndarray:
    """Student weights ``W`` (d x K), columns i.i.d. ``scale * N(0, I_d / d)``.

    Columns are drawn neuron by neuron, so the first ``k`` columns of a
    ``K``-neuron draw coincide with the ``k``-neuron draw for the same seed.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    if int(K) != K or K < 1:
        raise ValueError(f"neuron count must be a positive integer, got {K}")
    if not scale > 0:
        raise ValueError(f"init scale must be positive, got {scale}")
    G = _rng(seed).standard_normal((int(K), int(d)))
    return np.ascontiguousarray((scale / np.sqrt(d)) * G.T)
