"""Closed-form and semi-analytic error theory for the energy-based estimators.

Moments of the overall noise Delta = Delta_1 + Delta_2 + Delta_3, the
geometric bias constant lambda_M, and the Gaussian / log-normal outage
approximations averaged over the reading distribution by Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats
from scipy.special import erfc

from .channel import batch_frames
from .model import (ConfigurationError, FunctionKind, LambdaExistenceError, NetworkConfig,
                    NomographicFunction, reading_powers)
from .readings import ReadingDistribution

Z95 = 1.959963984540054


@dataclass(frozen=True)
class ConditionalNoiseStats:
    mean: float
    var_cond: float
    var_marginal: Optional[float] = None


@dataclass(frozen=True)
class GeoApproxParams:
    mu_xi: float
    sigma_xi_cond: float
    lambda_m: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class MCValue:
    """A Monte Carlo estimate with its 95% confidence half-width."""

    value: float
    half_width: float

    def __float__(self) -> float:
        return self.value


def pair_index(k: int, l: int, K: int) -> int:
    """1-based index n(k, l) of the unordered pair k < l (both 1-based)."""
    if not 1 <= k < l <= K:
        raise ValueError(f"need 1 <= k < l <= K, got k={k}, l={l}, K={K}")
    return l + (k - 1) * K - k * (k + 1) // 2


def pair_products(powers) -> np.ndarray:
    """p_k p_l for every pair, ordered by ``pair_index``."""
    p = np.asarray(powers, dtype=float)
    K = len(p)
    out = np.empty(K * (K - 1) // 2)
    for k in range(1, K):
        for l in range(k + 1, K + 1):
            out[pair_index(k, l, K) - 1] = p[k - 1] * p[l - 1]
    return out


def _pair_sum(p: np.ndarray) -> np.ndarray:
    """sum_{k<l} p_k p_l along the last axis."""
    s = p.sum(axis=-1)
    return 0.5 * (s * s - np.sum(p * p, axis=-1))


def cond_var_delta(powers, M: int, sigma_N_sq: float, orthogonal: bool = False):
    """Variance of Delta given the readings.

    ``powers`` may be (K,) or a batch (n, K). With ``orthogonal`` sequences
    the cross-interference term is identically zero and drops out.
    """
    p = np.asarray(powers, dtype=float)
    cross = 0.0 if orthogonal else 2.0 * M * _pair_sum(p)
    return cross + 2.0 * M * sigma_N_sq * p.sum(axis=-1) + M * sigma_N_sq**2


def conditional_stats(cfg: NetworkConfig, fn: NomographicFunction, x,
                      readings: Optional[ReadingDistribution] = None) -> ConditionalNoiseStats:
    var_m = var_delta(cfg, fn, readings) if readings is not None else None
    return ConditionalNoiseStats(cfg.M * cfg.sigma_N_sq,
                                 float(cond_var_delta(reading_powers(fn, x), cfg.M, cfg.sigma_N_sq,
                                                      _orthogonal(cfg))),
                                 var_m)


def _orthogonal(cfg: NetworkConfig) -> bool:
    return cfg.phase_mode.kind == "orthogonal"


def power_moments(fn: NomographicFunction, readings: ReadingDistribution,
                  n_samples: int = 100_000, seed: int = 0) -> tuple[np.ndarray, float]:
    """(E{p_k} per node, sum over pairs of E{p_k p_l}).

    Uses closed forms when the reading distribution provides E{phi(X)} for
    i.i.d. nodes; otherwise falls back to sampling.
    """
    K = fn.K
    if readings.point_mass:
        p = reading_powers(fn, readings.x)
        return p, float(_pair_sum(p))
    mean_phi = readings.mean_phi(fn)
    if mean_phi is not None:
        ep = fn.alpha * (mean_phi - fn.phi_min)
        # i.i.d. nodes: E{p_k p_l} = E{p}^2 for k != l
        return np.full(K, ep), K * (K - 1) / 2 * ep * ep
    rng = np.random.default_rng(seed)
    x = readings.sample(rng, n_samples, K)
    p = reading_powers(fn, x)
    return p.mean(axis=0), float(np.mean(_pair_sum(p)))


def var_delta(cfg: NetworkConfig, fn: NomographicFunction, readings: ReadingDistribution,
              n_samples: int = 100_000, seed: int = 0) -> float:
    """Marginal variance of Delta over the reading distribution."""
    ep, epair = power_moments(fn, readings, n_samples, seed)
    M, s2 = cfg.M, cfg.sigma_N_sq
    cross = 0.0 if _orthogonal(cfg) else 2.0 * M * epair
    return cross + 2.0 * M * s2 * float(np.sum(ep)) + M * s2**2


def check_lambda_existence(cfg: NetworkConfig, fn: NomographicFunction) -> None:
    alpha_KM = fn.alpha * fn.K * cfg.M
    if not cfg.sigma_N_sq * fn.log_a < alpha_KM:
        raise LambdaExistenceError(cfg.sigma_N_sq, fn.log_a, alpha_KM)


def lambda_m(cfg: NetworkConfig, fn: NomographicFunction) -> float:
    """E{psi(Delta_3 / (alpha M))} = (aKM / (aKM - sigma^2 ln a))^M, in log space."""
    check_lambda_existence(cfg, fn)
    alpha_KM = fn.alpha * fn.K * cfg.M
    return math.exp(-cfg.M * math.log1p(-cfg.sigma_N_sq * fn.log_a / alpha_KM))


def lambda_limit(cfg: NetworkConfig, fn: NomographicFunction) -> float:
    """Limit of lambda_M as M grows: exp(sigma^2 ln a / (alpha K))."""
    return math.exp(cfg.sigma_N_sq * fn.log_a / (fn.alpha * fn.K))


def geo_params(cfg: NetworkConfig, fn: NomographicFunction, x) -> GeoApproxParams:
    """Log-normal approximation parameters for one reading vector.

    sigma_Xi uses sigma_Delta ln a / (alpha K M), the scale implied by
    ln Xi = Delta ln a / (alpha K M).
    """
    p = reading_powers(fn, x)
    lam = lambda_m(cfg, fn)
    beta = fn.evaluate(x) / (fn.f_max - fn.f_min)
    sd = math.sqrt(cond_var_delta(p, cfg.M, cfg.sigma_N_sq, _orthogonal(cfg)))
    return GeoApproxParams(
        mu_xi=cfg.sigma_N_sq * fn.log_a / (fn.alpha * fn.K),
        sigma_xi_cond=sd * fn.log_a / (fn.alpha * fn.K * cfg.M),
        lambda_m=lam, beta=beta, gamma=lam / beta,
    )


def conditional_outage_arithmetic(cfg: NetworkConfig, fn: NomographicFunction,
                                  epsilon, powers) -> np.ndarray:
    """erfc(alpha' eps / sqrt(2 var_cond)) for a batch of power vectors.

    Returns (n, len(epsilon)); alpha' = M K P_max.
    """
    eps = np.atleast_1d(np.asarray(epsilon, dtype=float))
    var = np.atleast_1d(cond_var_delta(powers, cfg.M, cfg.sigma_N_sq, _orthogonal(cfg)))
    alpha_p = cfg.M * fn.K * fn.P_max
    with np.errstate(divide="ignore"):
        z = alpha_p * eps[None, :] / np.sqrt(2.0 * var)[:, None]
    return erfc(z)


def conditional_outage_geometric(cfg: NetworkConfig, fn: NomographicFunction,
                                 epsilon, x) -> np.ndarray:
    """Piecewise log-normal outage for a batch of reading vectors; (n, len(eps))."""
    eps = np.atleast_1d(np.asarray(epsilon, dtype=float))[None, :]
    x = np.atleast_2d(np.asarray(x, dtype=float))
    lam = lambda_m(cfg, fn)
    p = reading_powers(fn, x)
    f = np.exp(np.mean(np.log(x), axis=1))
    beta = (f / (fn.f_max - fn.f_min))[:, None]
    gamma = lam / beta
    mu = cfg.sigma_N_sq * fn.log_a / (fn.alpha * fn.K)
    sd = np.sqrt(cond_var_delta(p, cfg.M, cfg.sigma_N_sq, _orthogonal(cfg)))
    sig = (sd * fn.log_a / (fn.alpha * fn.K * cfg.M))[:, None]
    root2 = math.sqrt(2.0)

    with np.errstate(divide="ignore", invalid="ignore"):
        z_plus = (np.log(gamma * (beta + eps)) - mu) / (root2 * sig)
        inner = eps < beta
        rho_minus = np.where(inner, gamma * (beta - eps), 1.0)
        z_minus = (np.log(rho_minus) - mu) / (root2 * sig)
        # 1 - F(rho+) + F(rho-) written with erfc to keep the tails accurate
        two_sided = 0.5 * erfc(z_plus) + 0.5 * erfc(-z_minus)
        one_sided = 0.5 * erfc(z_plus)
    out = np.where(inner, two_sided, one_sided)
    if np.any(sig == 0):
        # noiseless: |E| = 0 exactly
        out = np.where(sig == 0, 0.0, out)
    return np.clip(out, 0.0, 1.0)


def outage_arithmetic(cfg: NetworkConfig, fn: NomographicFunction, epsilon,
                      readings: ReadingDistribution, n_samples: int = 100_000,
                      seed: int = 0, chunk: int = 20_000):
    """Gaussian outage approximation averaged over the reading distribution.

    Scalar epsilon returns an MCValue; an array returns (values, half_widths).
    """
    if fn.kind is not FunctionKind.ARITHMETIC_MEAN:
        raise ConfigurationError("outage_arithmetic needs an arithmetic_mean function")
    return _integrate(lambda x: conditional_outage_arithmetic(cfg, fn, _eps(epsilon),
                                                              reading_powers(fn, x)),
                      epsilon, fn.K, readings, n_samples, seed, chunk)


def outage_geometric(cfg: NetworkConfig, fn: NomographicFunction, epsilon,
                     readings: ReadingDistribution, n_samples: int = 100_000,
                     seed: int = 0, chunk: int = 20_000):
    """Log-normal outage approximation averaged over the reading distribution."""
    if fn.kind is not FunctionKind.GEOMETRIC_MEAN:
        raise ConfigurationError("outage_geometric needs a geometric_mean function")
    check_lambda_existence(cfg, fn)
    return _integrate(lambda x: conditional_outage_geometric(cfg, fn, _eps(epsilon), x),
                      epsilon, fn.K, readings, n_samples, seed, chunk)


def outage_analytic(cfg: NetworkConfig, fn: NomographicFunction, epsilon,
                    readings: ReadingDistribution, n_samples: int = 100_000, seed: int = 0):
    if fn.kind is FunctionKind.ARITHMETIC_MEAN:
        return outage_arithmetic(cfg, fn, epsilon, readings, n_samples, seed)
    if fn.kind is FunctionKind.GEOMETRIC_MEAN:
        return outage_geometric(cfg, fn, epsilon, readings, n_samples, seed)
    raise ConfigurationError(f"no analytic outage approximation for {fn.kind.value}")


def _eps(epsilon) -> np.ndarray:
    eps = np.atleast_1d(np.asarray(epsilon, dtype=float))
    if np.any(eps <= 0):
        raise ConfigurationError("epsilon must be > 0")
    return eps


def _integrate(cond, epsilon, K, readings, n_samples, seed, chunk):
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    sums = None
    sq = None
    n_eff = 1 if readings.point_mass else n_samples
    for lo in range(0, n_eff, chunk):
        x = readings.sample(rng, min(chunk, n_eff - lo), K)
        v = cond(x)
        s, s2 = v.sum(axis=0), (v * v).sum(axis=0)
        sums = s if sums is None else sums + s
        sq = s2 if sq is None else sq + s2
    mean = sums / n_eff
    var = np.maximum(sq / n_eff - mean * mean, 0.0) * n_eff / max(n_eff - 1, 1)
    half = Z95 * np.sqrt(var / n_eff)
    if np.ndim(epsilon) == 0:
        return MCValue(float(mean[0]), float(half[0]))
    return mean, half


def markov_bound_arithmetic(cfg: NetworkConfig, fn: NomographicFunction, epsilon,
                            variance: float):
    """Chebyshev bound P(|E| >= eps) <= Var{Delta} / (alpha' eps)^2 (diagnostic only)."""
    alpha_p = cfg.M * fn.K * fn.P_max
    return np.minimum(1.0, variance / (alpha_p * np.asarray(epsilon, dtype=float)) ** 2)


def markov_bound_geometric_upper(cfg: NetworkConfig, fn: NomographicFunction, epsilon, x):
    """Markov bound on P(Xi/lambda_M >= 1 + eps/beta) for one reading vector (diagnostic only)."""
    g = geo_params(cfg, fn, x)
    num = g.mu_xi - math.log(g.lambda_m)
    return np.minimum(1.0, np.maximum(num, 0.0) / np.log1p(np.asarray(epsilon) / g.beta))


def ks_distance_standard_normal(samples) -> float:
    return float(stats.kstest(np.asarray(samples, dtype=float), "norm").statistic)


def gaussian_approx_check(cfg: NetworkConfig, fn: NomographicFunction, x, n_frames: int,
                          rng: np.random.Generator, dtype=np.float32) -> float:
    """KS distance between standardized Delta given x and N(0, 1).

    Frames use float32 trig by default; the rounding is far below the
    KS resolution of any feasible ``n_frames``.
    """
    if n_frames < 1000:
        raise ConfigurationError("gaussian_approx_check needs n_frames >= 1000")
    p = reading_powers(fn, x)
    fr = batch_frames(cfg, p, rng, n_frames, dtype=dtype)
    delta = fr["delta1"] + fr["delta2"] + fr["delta3"]
    sd = math.sqrt(cond_var_delta(p, cfg.M, cfg.sigma_N_sq, _orthogonal(cfg)))
    return ks_distance_standard_normal((delta - cfg.M * cfg.sigma_N_sq) / sd)


def gamma_normal_ks(M: int) -> float:
    """Sup distance between standardized Gamma(M) and N(0, 1), evaluated on a fine grid.

    Delta reduces to Delta_3 ~ Gamma(M, sigma^2) when all powers are zero.
    """
    z = np.linspace(-8, 8, 200_001)
    g = stats.gamma(M, loc=-math.sqrt(M), scale=1.0 / math.sqrt(M))
    return float(np.max(np.abs(g.cdf(z) - stats.norm.cdf(z))))


def mean_log_xi(cfg: NetworkConfig, fn: NomographicFunction) -> float:
    """E{ln Xi | x} from E{Delta | x} = M sigma^2; the same for every x."""
    return cfg.M * cfg.sigma_N_sq * fn.log_a / (fn.alpha * fn.K * cfg.M)


def log_xi(fn: NomographicFunction, delta, M: int):
    """ln psi(Delta / (alpha M)) = Delta ln a / (alpha K M)."""
    return np.asarray(delta) * fn.log_a / (fn.alpha * fn.K * M)


def expected_power(fn: NomographicFunction, readings: ReadingDistribution) -> float:
    """E{P_1} for i.i.d. readings; closed form where available."""
    ep, _ = power_moments(fn, readings)
    return float(ep[0])

