"""Reading distributions p_X used by the experiments and the analytic integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ConfigurationError, FunctionKind, NomographicFunction


class ReadingDistribution:
    point_mass = False

    def sample(self, rng: np.random.Generator, n: int, K: int) -> np.ndarray:
        raise NotImplementedError

    def mean_phi(self, fn: NomographicFunction) -> Optional[float]:
        """E{phi(X)} for one node, or None when no closed form is known."""
        return None


@dataclass(frozen=True)
class UniformIID(ReadingDistribution):
    """Readings i.i.d. uniform on [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigurationError(f"uniform readings need lo < hi, got [{self.lo}, {self.hi}]")

    def sample(self, rng, n, K):
        return rng.uniform(self.lo, self.hi, size=(n, K))

    def mean_phi(self, fn):
        lo, hi = self.lo, self.hi
        kind = fn.kind
        if kind is FunctionKind.ARITHMETIC_MEAN:
            return 0.5 * (lo + hi)
        if kind is FunctionKind.GEOMETRIC_MEAN:
            # E{ln X} for X ~ U[lo, hi]
            e_ln = (hi * math.log(hi) - hi - lo * math.log(lo) + lo) / (hi - lo)
            return e_ln / fn.log_a
        if kind is FunctionKind.Q_NORM:
            q = fn.q
            return (hi ** (q + 1) - lo ** (q + 1)) / ((q + 1) * (hi - lo))
        if kind is FunctionKind.NODE_COUNT:
            return fn.c
        return None


@dataclass(frozen=True)
class PointMass(ReadingDistribution):
    """Degenerate distribution at a fixed reading vector (conditional mode)."""

    x: tuple
    point_mass = True

    def __init__(self, x):
        object.__setattr__(self, "x", tuple(float(v) for v in x))

    def sample(self, rng, n, K):
        if len(self.x) != K:
            raise ConfigurationError(f"fixed readings have length {len(self.x)}, expected {K}")
        return np.broadcast_to(np.asarray(self.x), (n, K)).copy()

    def mean_phi(self, fn):
        return None
