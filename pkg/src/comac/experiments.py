"""Monte Carlo orchestration: outage curves, CoMAC/TDMA comparisons.

Every trial draws from its own random streams keyed by
``(seed, scheme, role, trial, *stream_key)`` (see ``streams``), so results
are identical for any worker count. Both CoMAC receivers (practical and
reference) observe the same physical frames; TDMA uses its own streams.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import streams
from .analysis import check_lambda_existence, outage_analytic
from .channel import frame_energy_fast
from .model import ConfigurationError, FunctionKind, NetworkConfig, NomographicFunction, reading_powers
from .readings import ReadingDistribution
from .receiver import estimate, estimate_unbiased_geometric_reference
from .tdma import TdmaConfig, check_fairness, sigma_sq_for_snr, tdma_trial

log = logging.getLogger(__name__)

SCHEMES = ("comac", "comac_unbiased_ref", "tdma")
Z95 = 1.959963984540054


def default_epsilon_grid(n: int = 40, lo: float = 1e-3, hi: float = 0.3) -> tuple:
    return tuple(float(v) for v in np.logspace(math.log10(lo), math.log10(hi), n))


@dataclass(frozen=True)
class ExperimentSpec:
    network: NetworkConfig
    function: NomographicFunction
    readings: ReadingDistribution
    scheme: str = "comac"
    epsilon_grid: tuple = field(default_factory=default_epsilon_grid)
    n_trials: int = 10_000
    tdma: Optional[TdmaConfig] = None
    snr_db: Optional[float] = None
    analytic_samples: int = 100_000
    stream_key: tuple = ()

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        eps = np.asarray(self.epsilon_grid, dtype=float)
        if eps.size == 0:
            raise ConfigurationError("epsilon_grid must not be empty")
        if np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
            raise ConfigurationError("epsilon_grid must be positive and strictly increasing")
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise ConfigurationError(f"n_trials must be a positive integer, got {self.n_trials}")
        if self.network.K != self.function.K:
            raise ConfigurationError(
                f"network K={self.network.K} does not match function K={self.function.K}")
        if self.snr_db is not None and self.tdma is None:
            raise ConfigurationError("snr_db needs tdma.Q to be set")
        if self.scheme == "tdma":
            if self.tdma is None:
                raise ConfigurationError("scheme tdma needs a tdma section")
            check_fairness(self.network, self.tdma)
        if self.scheme == "comac_unbiased_ref" and self.function.kind is not FunctionKind.GEOMETRIC_MEAN:
            raise ConfigurationError("comac_unbiased_ref is defined for the geometric mean only")
        if self.function.kind is FunctionKind.GEOMETRIC_MEAN and self.scheme != "tdma":
            check_lambda_existence(self.resolved_network(), self.function)

    def resolved_network(self) -> NetworkConfig:
        """Network with sigma_N_sq set from snr_db when one is given."""
        if self.snr_db is None:
            return self.network
        s2 = sigma_sq_for_snr(self.network, self.function, self.tdma, self.readings, self.snr_db)
        return self.network.replace(sigma_N_sq=s2)

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)


@dataclass
class OutageCurve:
    epsilon: np.ndarray
    outage: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    n_trials: int
    seed: int
    analytic: Optional[np.ndarray] = None
    analytic_half_width: Optional[np.ndarray] = None
    scheme: str = "comac"
    excluded_total: int = 0
    clamped_total: int = 0

    @property
    def ci_half_width(self) -> np.ndarray:
        return 0.5 * (self.ci_hi - self.ci_lo)


@dataclass
class TrialData:
    """Per-trial outputs of a run, in trial order."""

    abs_error: np.ndarray
    excluded: np.ndarray
    clamped: np.ndarray


def wilson_interval(successes, n: int, z: float = Z95) -> tuple[np.ndarray, np.ndarray]:
    k = np.asarray(successes, dtype=float)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z / denom * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return np.clip(center - half, 0.0, 1.0), np.clip(center + half, 0.0, 1.0)


def outage_from_errors(abs_error: np.ndarray, epsilon) -> tuple[np.ndarray, np.ndarray]:
    """(outage estimate, exceedance counts) of P(|E| >= eps) for each eps."""
    eps = np.asarray(epsilon, dtype=float)
    sorted_err = np.sort(abs_error)
    counts = len(sorted_err) - np.searchsorted(sorted_err, eps, side="left")
    return counts / len(sorted_err), counts


# trial kernels


def _comac_chunk(spec: ExperimentSpec, cfg: NetworkConfig, trials: range) -> dict:
    fn = spec.function
    seed = cfg.seed
    sid = streams.COMAC
    key = spec.stream_key
    n = len(trials)
    f_true = np.empty(n)
    energy = np.empty(n)
    p_sum = np.empty(n)
    excluded = np.zeros(n, dtype=np.int64)
    for i, t in enumerate(trials):
        x = spec.readings.sample(streams.stream(seed, sid, streams.READINGS, t, *key), 1, cfg.K)[0]
        p = reading_powers(fn, x)
        energy[i], p_sum[i], excluded[i] = frame_energy_fast(
            cfg, p,
            streams.stream(seed, sid, streams.SEQUENCES, t, *key),
            streams.stream(seed, sid, streams.CHANNEL, t, *key),
            streams.stream(seed, sid, streams.NOISE, t, *key),
        )
        f_true[i] = fn.evaluate(x)
    return {"f_true": f_true, "energy": energy, "p_sum": p_sum, "excluded": excluded}


def _tdma_chunk(spec: ExperimentSpec, cfg: NetworkConfig, trials: range) -> dict:
    fn = spec.function
    seed = cfg.seed
    sid = streams.TDMA
    key = spec.stream_key
    n = len(trials)
    err = np.empty(n)
    clamped = np.zeros(n, dtype=np.int64)
    for i, t in enumerate(trials):
        x = spec.readings.sample(streams.stream(seed, sid, streams.READINGS, t, *key), 1, cfg.K)[0]
        res = tdma_trial(streams.stream(seed, sid, streams.BITS, t, *key), cfg, fn, spec.tdma, x)
        err[i] = res.error_normalized
        clamped[i] = res.clamped
    return {"error": err, "clamped": clamped}


def _run_chunk(args):
    spec, cfg, lo, hi = args
    if spec.scheme == "tdma":
        return _tdma_chunk(spec, cfg, range(lo, hi))
    return _comac_chunk(spec, cfg, range(lo, hi))


def _map_chunks(spec: ExperimentSpec, cfg: NetworkConfig, workers: int, chunk: int = 250) -> dict:
    bounds = [(lo, min(lo + chunk, spec.n_trials)) for lo in range(0, spec.n_trials, chunk)]
    jobs = [(spec, cfg, lo, hi) for lo, hi in bounds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def run_trials(spec: ExperimentSpec, workers: int = 1) -> TrialData:
    """Run every trial of ``spec`` and return the per-trial absolute errors."""
    spec.validate()
    cfg = spec.resolved_network()
    fn = spec.function
    raw = _map_chunks(spec, cfg, workers)
    if spec.scheme == "tdma":
        return TrialData(np.abs(raw["error"]), np.zeros(spec.n_trials, dtype=np.int64), raw["clamped"])

    if spec.scheme == "comac":
        f_hat = estimate(cfg, fn, raw["energy"])
    else:
        f_hat = reference_estimates(cfg, fn, raw["energy"], raw["p_sum"])
    err = (f_hat - raw["f_true"]) / fn.f_range
    return TrialData(np.abs(err), raw["excluded"], np.zeros(spec.n_trials, dtype=np.int64))


def reference_estimates(cfg: NetworkConfig, fn: NomographicFunction, energy, p_sum) -> np.ndarray:
    """Reference geometric estimates; the denominator E{psi(Delta/(alpha M))} is
    the Monte Carlo mean over the same trials, using their true Delta."""
    delta = np.asarray(energy) - cfg.M * np.asarray(p_sum)
    denom = float(np.mean(np.power(fn.a, delta / (fn.alpha * fn.K * cfg.M))))
    return estimate_unbiased_geometric_reference(cfg, fn, np.asarray(energy), denom)


def _analytic_seed(seed: int, key: tuple) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=(streams.ANALYTIC,) + tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def analytic_curve(spec: ExperimentSpec) -> tuple[np.ndarray, np.ndarray]:
    cfg = spec.resolved_network()
    return outage_analytic(cfg, spec.function, np.asarray(spec.epsilon_grid),
                           spec.readings, spec.analytic_samples,
                           _analytic_seed(cfg.seed, spec.stream_key))


def run_outage(spec: ExperimentSpec, workers: int = 1, with_analytic: bool = True) -> OutageCurve:
    """Monte Carlo outage curve with Wilson 95% intervals (and the analytic curve for CoMAC)."""
    spec.validate()
    cfg = spec.resolved_network()
    log.info("run_outage scheme=%s K=%d M=%d sigma2=%.4g trials=%d",
             spec.scheme, cfg.K, cfg.M, cfg.sigma_N_sq, spec.n_trials)
    data = run_trials(spec, workers)
    eps = np.asarray(spec.epsilon_grid, dtype=float)
    outage, counts = outage_from_errors(data.abs_error, eps)
    lo, hi = wilson_interval(counts, spec.n_trials)
    curve = OutageCurve(eps, outage, lo, hi, spec.n_trials, cfg.seed, scheme=spec.scheme,
                        excluded_total=int(data.excluded.sum()),
                        clamped_total=int(data.clamped.sum()))
    analytic_kinds = (FunctionKind.ARITHMETIC_MEAN, FunctionKind.GEOMETRIC_MEAN)
    if with_analytic and spec.scheme == "comac" and spec.function.kind in analytic_kinds:
        curve.analytic, curve.analytic_half_width = analytic_curve(spec)
    return curve


@dataclass
class ComparisonPoint:
    snr_db: float
    sigma_N_sq: float
    comac: OutageCurve
    tdma: OutageCurve

    @property
    def dominance(self) -> bool:
        return not dominance_violations(self.comac, self.tdma)


def dominance_violations(comac: OutageCurve, tdma: OutageCurve, threshold: float = 0.01) -> list:
    """Grid points where TDMA outage exceeds ``threshold`` but CoMAC is not strictly better."""
    return [(float(e), float(c), float(t))
            for e, c, t in zip(comac.epsilon, comac.outage, tdma.outage)
            if t > threshold and not c < t]


def run_comparison(comac_spec: ExperimentSpec, tdma_spec: ExperimentSpec,
                   snr_db_list: Sequence[float], workers: int = 1) -> list[ComparisonPoint]:
    """Paired CoMAC/TDMA outage curves at each SNR_f operating point."""
    a, b = comac_spec, tdma_spec
    if a.network.K != b.network.K:
        raise ConfigurationError("comparison specs must share K")
    if a.function != b.function:
        raise ConfigurationError("comparison specs must share the desired function")
    if a.readings != b.readings:
        raise ConfigurationError("comparison specs must share the reading distribution")
    if b.tdma is None:
        raise ConfigurationError("tdma spec needs a tdma section")
    check_fairness(a.network, b.tdma)
    if b.network.M != a.network.M:
        raise ConfigurationError("comparison specs must share M")
    points = []
    for i, snr in enumerate(snr_db_list):
        key = (i,)
        ca = a.replace(scheme="comac", tdma=b.tdma, snr_db=float(snr), stream_key=key)
        cb = b.replace(scheme="tdma", snr_db=float(snr), stream_key=key)
        s2 = ca.resolved_network().sigma_N_sq
        points.append(ComparisonPoint(float(snr), s2, run_outage(ca, workers), run_outage(cb, workers)))
    return points
