"""Domain types and the nomographic function framework.

A desired function is represented in nomographic form
``f(x) = psi(sum_k phi_k(x_k))``. Each node maps its pre-processed reading
onto a transmit power with the affine map ``g(phi) = alpha * (phi - phi_min)``,
and the receiver undoes it with ``h(z) = z / (M * alpha) + K * phi_min``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

EXACT_RTOL = 1e-9


class ConfigurationError(ValueError):
    """Invalid parameters; raised before any computation starts."""


class DomainError(ValueError):
    """An input value lies outside the admissible domain."""


class FrameError(RuntimeError):
    """A frame could not be transmitted (e.g. every node was excluded)."""


class LambdaExistenceError(ConfigurationError):
    """The geometric bias constant does not exist for these parameters."""

    def __init__(self, sigma_N_sq: float, log_a: float, alpha_KM: float):
        super().__init__(
            "geometric bias correction lambda_M requires "
            f"sigma_N^2 * ln(a) < alpha_geo * K * M "
            f"(got {sigma_N_sq * log_a:.6g} >= {alpha_KM:.6g})"
        )


@dataclass(frozen=True)
class SensingRange:
    s_min: float
    s_max: float

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ConfigurationError(f"sensing range needs s_min < s_max, got {self}")

    @property
    def width(self) -> float:
        return self.s_max - self.s_min


@dataclass(frozen=True)
class ReadingRange:
    x_min: float
    x_max: float

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ConfigurationError(f"reading range needs x_min < x_max, got {self}")

    def check_within(self, sensing: SensingRange) -> None:
        if self.x_min < sensing.s_min or self.x_max > sensing.s_max:
            raise ConfigurationError(
                f"reading range [{self.x_min}, {self.x_max}] is not inside "
                f"sensing range [{sensing.s_min}, {sensing.s_max}]"
            )


class FadingMode(str, enum.Enum):
    IDEAL = "ideal"
    RAYLEIGH_INVERTED = "rayleigh_inverted"


@dataclass(frozen=True)
class PhaseMode:
    """How transmit sequence phases are drawn.

    ``continuous``: i.i.d. uniform on [0, 2pi).
    ``discrete``: i.i.d. uniform on the L-point grid {2 pi j / L}; L even.
    ``orthogonal``: deterministic DFT rows ``2 pi k m / M`` (needs K <= M);
    the cross-interference term vanishes exactly.
    """

    kind: str = "continuous"
    L: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("continuous", "discrete", "orthogonal"):
            raise ConfigurationError(f"unknown phase mode {self.kind!r}")
        if self.kind == "discrete":
            if self.L is None or self.L < 2 or self.L % 2:
                raise ConfigurationError(
                    f"discrete phase mode needs an even L >= 2 (conjugate pairs), got {self.L}"
                )
        elif self.L is not None:
            raise ConfigurationError(f"phase mode {self.kind!r} takes no L")

    @classmethod
    def parse(cls, text: str) -> "PhaseMode":
        """Parse ``continuous``, ``orthogonal`` or ``discrete:<L>``."""
        if text.startswith("discrete"):
            _, _, L = text.partition(":")
            try:
                return cls("discrete", int(L))
            except ValueError:
                raise ConfigurationError(f"bad discrete phase mode {text!r}") from None
        return cls(text)

    def __str__(self) -> str:
        return f"discrete:{self.L}" if self.kind == "discrete" else self.kind


@dataclass(frozen=True)
class NetworkConfig:
    K: int
    M: int
    P_max: float
    sigma_N_sq: float
    sensing: SensingRange
    readings: ReadingRange
    fading_mode: FadingMode = FadingMode.IDEAL
    phase_mode: PhaseMode = PhaseMode()
    seed: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ConfigurationError(f"K must be a positive integer, got {self.K}")
        if int(self.M) != self.M or self.M < 1:
            raise ConfigurationError(f"M must be a positive integer, got {self.M}")
        if not self.P_max > 0:
            raise ConfigurationError(f"P_max must be > 0, got {self.P_max}")
        if not self.sigma_N_sq >= 0:
            raise ConfigurationError(f"sigma_N_sq must be >= 0, got {self.sigma_N_sq}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "fading_mode", FadingMode(self.fading_mode))
        self.readings.check_within(self.sensing)
        if self.phase_mode.kind == "orthogonal" and self.K > self.M:
            raise ConfigurationError("orthogonal sequences need K <= M")

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)


class FunctionKind(str, enum.Enum):
    ARITHMETIC_MEAN = "arithmetic_mean"
    GEOMETRIC_MEAN = "geometric_mean"
    WEIGHTED_SUM = "weighted_sum"
    NODE_COUNT = "node_count"
    Q_NORM = "q_norm"


@dataclass(frozen=True)
class NomographicFunction:
    """A desired function together with its power mapping constants.

    Build instances with the classmethod constructors; they derive
    ``phi_min``, ``phi_max``, ``alpha`` and the normalization range
    ``f_min``/``f_max`` from the sensing range and ``P_max``.
    """

    kind: FunctionKind
    K: int
    P_max: float
    sensing: SensingRange
    phi_min: float
    phi_max: float
    f_min: float
    f_max: float
    a: float = 2.0
    s_prime: Optional[float] = None
    q: Optional[float] = None
    weights: Optional[tuple] = None
    offset: float = 0.0
    c: Optional[float] = None
    alpha: float = field(init=False)

    def __post_init__(self):
        if not self.phi_min < self.phi_max:
            raise ConfigurationError(f"need phi_min < phi_max ({self.phi_min}, {self.phi_max})")
        object.__setattr__(self, "alpha", self.P_max / (self.phi_max - self.phi_min))

    # constructors

    @classmethod
    def arithmetic_mean(cls, K: int, sensing: SensingRange, P_max: float) -> "NomographicFunction":
        return cls(FunctionKind.ARITHMETIC_MEAN, K, P_max, sensing,
                   phi_min=sensing.s_min, phi_max=sensing.s_max,
                   f_min=sensing.s_min, f_max=sensing.s_max)

    @classmethod
    def geometric_mean(cls, K: int, sensing: SensingRange, P_max: float,
                       readings: ReadingRange, a: float = 2.0,
                       s_prime: Optional[float] = None) -> "NomographicFunction":
        if not a > 1:
            raise ConfigurationError(f"log base a must be > 1, got {a}")
        if sensing.s_min > 0:
            s_prime = sensing.s_min if s_prime is None else s_prime
        elif s_prime is None:
            raise ConfigurationError("geometric mean over a sensing range with s_min <= 0 needs s_prime")
        if not 0 < s_prime <= readings.x_min < sensing.s_max:
            raise ConfigurationError(
                f"geometric mean needs 0 < s_prime <= x_min < s_max "
                f"(s_prime={s_prime}, x_min={readings.x_min}, s_max={sensing.s_max})"
            )
        return cls(FunctionKind.GEOMETRIC_MEAN, K, P_max, sensing,
                   phi_min=math.log(s_prime, a), phi_max=math.log(sensing.s_max, a),
                   f_min=s_prime, f_max=sensing.s_max, a=a, s_prime=s_prime)

    @classmethod
    def weighted_sum(cls, weights: Sequence[float], sensing: SensingRange, P_max: float,
                     offset: float = 0.0) -> "NomographicFunction":
        w = tuple(float(v) for v in weights)
        if not w:
            raise ConfigurationError("weighted_sum needs at least one weight")
        lo = [min(v * sensing.s_min, v * sensing.s_max) for v in w]
        hi = [max(v * sensing.s_min, v * sensing.s_max) for v in w]
        return cls(FunctionKind.WEIGHTED_SUM, len(w), P_max, sensing,
                   phi_min=min(lo), phi_max=max(hi),
                   f_min=sum(lo) + offset, f_max=sum(hi) + offset,
                   weights=w, offset=offset)

    @classmethod
    def node_count(cls, K: int, sensing: SensingRange, P_max: float, c: float = 1.0) -> "NomographicFunction":
        if not c > 0:
            raise ConfigurationError(f"node_count constant must be > 0, got {c}")
        # phi range [0, c] so every node sends at P_max; errors are relative to K
        return cls(FunctionKind.NODE_COUNT, K, P_max, sensing,
                   phi_min=0.0, phi_max=c, f_min=0.0, f_max=float(K), c=c)

    @classmethod
    def q_norm(cls, K: int, sensing: SensingRange, P_max: float, readings: ReadingRange,
               q: float) -> "NomographicFunction":
        if not q >= 1:
            raise ConfigurationError(f"q_norm needs q >= 1, got {q}")
        if readings.x_min < 0:
            raise ConfigurationError("q_norm needs nonnegative readings (x_min >= 0)")
        lo = max(sensing.s_min, 0.0)
        scale = K ** (1.0 / q)
        return cls(FunctionKind.Q_NORM, K, P_max, sensing,
                   phi_min=lo**q, phi_max=sensing.s_max**q,
                   f_min=scale * lo, f_max=scale * sensing.s_max, q=q)

    # derived quantities

    @property
    def domain(self) -> tuple[float, float]:
        """Interval on which the function is (continuously extended and) defined."""
        if self.kind is FunctionKind.GEOMETRIC_MEAN:
            return self.s_prime, self.sensing.s_max
        if self.kind is FunctionKind.Q_NORM:
            return max(self.sensing.s_min, 0.0), self.sensing.s_max
        return self.sensing.s_min, self.sensing.s_max

    @property
    def f_range(self) -> float:
        return self.f_max - self.f_min

    @property
    def log_a(self) -> float:
        return math.log(self.a)

    def evaluate(self, x) -> float:
        """Direct evaluation of f(x) (no nomographic detour)."""
        x = np.asarray(x, dtype=float)
        self._check_len(x)
        kind = self.kind
        if kind is FunctionKind.ARITHMETIC_MEAN:
            return float(np.mean(x))
        if kind is FunctionKind.GEOMETRIC_MEAN:
            if np.any(x <= 0):
                raise DomainError("geometric mean needs positive readings")
            return float(np.exp(np.mean(np.log(x))))
        if kind is FunctionKind.WEIGHTED_SUM:
            return float(np.dot(self.weights, x) + self.offset)
        if kind is FunctionKind.NODE_COUNT:
            return float(len(x))
        if np.any(x < 0):
            raise DomainError("q_norm needs nonnegative readings")
        return float(np.sum(x**self.q) ** (1.0 / self.q))

    def _check_len(self, x: np.ndarray) -> None:
        if x.ndim != 1 or len(x) != self.K:
            raise DomainError(f"expected {self.K} readings, got shape {x.shape}")


# The five nomographic building blocks. All accept scalars or arrays.

def preprocess(fn: NomographicFunction, x, node: Optional[int] = None):
    """phi_k(x). ``node`` selects the weight for ``weighted_sum``; when x is
    a full reading vector of length K the per-node weights are applied
    elementwise."""
    x = np.asarray(x, dtype=float)
    kind = fn.kind
    if kind is FunctionKind.ARITHMETIC_MEAN:
        out = x
    elif kind is FunctionKind.GEOMETRIC_MEAN:
        if np.any(x <= 0):
            raise DomainError(f"geometric pre-processing needs x > 0, got {x}")
        out = np.log(x) / fn.log_a
    elif kind is FunctionKind.Q_NORM:
        if np.any(x < 0):
            raise DomainError(f"q_norm pre-processing needs x >= 0, got {x}")
        out = x**fn.q
    elif kind is FunctionKind.WEIGHTED_SUM:
        w = np.asarray(fn.weights)
        if node is not None:
            out = w[node] * x
        elif x.shape[-1:] == (fn.K,):
            out = w * x
        else:
            raise DomainError("weighted_sum pre-processing needs a node index or a length-K vector")
    else:
        out = np.full_like(x, fn.c)
    return out if out.ndim else float(out)


def map_to_power(fn: NomographicFunction, phi):
    """g(phi) = alpha * (phi - phi_min), mapping [phi_min, phi_max] onto [0, P_max]."""
    phi = np.asarray(phi, dtype=float)
    slack = 1e-12 * max(1.0, abs(fn.phi_min), abs(fn.phi_max))
    if np.any(phi < fn.phi_min - slack) or np.any(phi > fn.phi_max + slack):
        raise DomainError(f"pre-processed value outside [{fn.phi_min}, {fn.phi_max}]: {phi}")
    p = np.clip(fn.alpha * (phi - fn.phi_min), 0.0, fn.P_max)
    return p if p.ndim else float(p)


def unmap_energy(fn: NomographicFunction, z, M: int, K: Optional[int] = None):
    """h(z) = z / (M * alpha) + K * phi_min."""
    K = fn.K if K is None else K
    u = np.asarray(z, dtype=float) / (M * fn.alpha) + K * fn.phi_min
    return u if u.ndim else float(u)


def postprocess(fn: NomographicFunction, u):
    """psi(u)."""
    u = np.asarray(u, dtype=float)
    kind = fn.kind
    if kind is FunctionKind.ARITHMETIC_MEAN:
        out = u / fn.K
    elif kind is FunctionKind.GEOMETRIC_MEAN:
        out = np.power(fn.a, u / fn.K)
    elif kind is FunctionKind.WEIGHTED_SUM:
        out = u + fn.offset
    elif kind is FunctionKind.NODE_COUNT:
        out = u / fn.c
    else:
        out = np.power(np.maximum(u, 0.0), 1.0 / fn.q)
    return out if out.ndim else float(out)


def reading_powers(fn: NomographicFunction, x) -> np.ndarray:
    """Transmit powers P_k = g(phi_k(x_k)) for a reading vector (or a batch of them)."""
    return np.asarray(map_to_power(fn, preprocess(fn, x)), dtype=float)


def noiseless_roundtrip(fn: NomographicFunction, x, M: int,
                        g: Optional[Callable] = None, h: Optional[Callable] = None) -> float:
    """psi(h(M * sum_k g(phi_k(x_k)))), optionally with a substituted (g, h) pair."""
    phi = preprocess(fn, np.asarray(x, dtype=float))
    if g is None:
        z = M * float(np.sum(map_to_power(fn, phi)))
    else:
        z = M * float(np.sum([g(v) for v in np.atleast_1d(phi)]))
    u = unmap_energy(fn, z, M) if h is None else h(z)
    return postprocess(fn, u)


def exact_match(value: float, target: float, fn: NomographicFunction, rtol: float = EXACT_RTOL) -> bool:
    """Relative comparison scaled by the function's magnitude.

    The scale is ``max(|target|, |f_min|, |f_max|)`` so readings whose mean
    happens to sit near zero do not turn roundoff into a relative blow-up.
    """
    scale = max(abs(target), abs(fn.f_min), abs(fn.f_max))
    return abs(value - target) <= rtol * scale


def affine_pair_check(fn: NomographicFunction, samples: Iterable, M: int = 1,
                      g: Optional[Callable] = None, h: Optional[Callable] = None) -> bool:
    """True iff the noiseless reconstruction identity holds for every sample."""
    return all(exact_match(noiseless_roundtrip(fn, x, M, g, h), fn.evaluate(x), fn) for x in samples)


@dataclass(frozen=True)
class EstimateResult:
    f_hat: float
    f_true: float
    error_normalized: float
    excluded_nodes: int = 0
    clamped: int = 0
