"""Experiment configuration shared by the trainer and the command line."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

__all__ = ["ExperimentConfig", "MODES"]

MODES = ("empirical", "population", "approximated")

Number = Union[int, float]


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one run, or for a family of runs when ``K`` or ``eta``
    hold sequences (see :meth:`expand`).

    Defaults match the ``fig1`` preset: ``d=10``, ``n=200`` training and 200
    test samples, ``w* = e_1``, init scale 0.01, step 0.001.
    """

    d: int = 10
    n: int = 200
    n_test: int = 200
    K: Union[int, Sequence[int]] = 1
    eta: Union[float, Sequence[float]] = 0.001
    iters: int = 100_000
    seed: int = 0
    trials: int = 5
    init_scale: float = 0.01
    norm_w_star: float = 1.0
    mode: str = "empirical"
    theta: float = 0.0
    vartheta: float = 0.0
    stop_tol: Optional[float] = 1e-12
    record_stride: int = 1
    diverge_threshold: float = 1e12
    out_dir: Optional[str] = None

    def __post_init__(self):
        for name in ("K", "eta"):
            v = getattr(self, name)
            if isinstance(v, (list, tuple)):
                if len(v) == 0:
                    raise ValueError(f"{name} list must be nonempty")
                object.__setattr__(self, name, tuple(v))
        for k in self.Ks:
            if int(k) != k or k < 1:
                raise ValueError(f"K must be positive integers, got {k}")
        for e in self.etas:
            if not e > 0:
                raise ValueError(f"eta must be positive, got {e}")
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.n < 1 or self.n_test < 0:
            raise ValueError("n must be >= 1 and n_test >= 0")
        if self.iters < 0:
            raise ValueError("iters must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")
        if self.norm_w_star < 0:
            raise ValueError("norm_w_star must be nonnegative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0 <= self.theta < 1 and 0 <= self.vartheta < 1):
            raise ValueError("theta and vartheta must lie in [0, 1)")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def Ks(self) -> tuple:
        return self.K if isinstance(self.K, tuple) else (self.K,)

    @property
    def etas(self) -> tuple:
        return self.eta if isinstance(self.eta, tuple) else (self.eta,)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def expand(self):
        """Yield scalar configs over the ``eta`` x ``K`` grid."""
        for eta in self.etas:
            for K in self.Ks:
                yield self.replace(K=int(K), eta=float(eta))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for name in ("K", "eta"):
            if isinstance(out[name], tuple):
                out[name] = list(out[name])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
