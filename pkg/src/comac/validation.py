"""Self-check battery bundling the model, channel, analysis and TDMA invariants.

Identity checks (energy decomposition, orthogonality, noiseless
exactness, fairness) must hold to floating-point precision for every
seed. Statistical checks compare Monte Carlo estimates with their closed
forms within a stated number of standard errors; their statistics change
with the seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import streams
from .analysis import gamma_normal_ks, gaussian_approx_check, lambda_m, var_delta
from .channel import batch_frames, draw_channel, draw_phases, transmit_and_superimpose
from .model import (EXACT_RTOL, ConfigurationError, NetworkConfig, NomographicFunction,
                    PhaseMode, exact_match, reading_powers)
from .readings import UniformIID
from .receiver import decompose_noise, estimate, received_energy
from .tdma import TdmaConfig, ber_theory, check_fairness, transmit_bits

N_SE = 3.0
KS_LIMIT = 0.05


@dataclass
class Check:
    name: str
    passed: bool
    statistic: float = float("nan")
    threshold: float = float("nan")
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: statistic={self.statistic!r} threshold={self.threshold!r} {self.detail}".rstrip()


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        lines = [c.line() for c in self.checks]
        n_fail = sum(not c.passed for c in self.checks)
        lines.append(f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


@dataclass(frozen=True)
class ValidationConfig:
    """Inputs of the suite. ``s_prime`` and ``a`` define the geometric-mean function."""

    network: NetworkConfig
    reading_lo: float
    reading_hi: float
    a: float = 2.0
    s_prime: float = 0.5
    Q: int = 10
    n_frames: int = 100_000
    n_lambda: int = 1_000_000
    n_ks: int = 10_000
    n_bits: int = 1_000_000


def _rng(seed: int, check: int) -> np.random.Generator:
    return streams.stream(seed, streams.VALIDATION, check)


def _zscore_check(name: str, mean: float, target: float, se: float) -> Check:
    mean, target, se = float(mean), float(target), float(se)
    z = abs(mean - target) / se if se > 0 else (0.0 if mean == target else math.inf)
    return Check(name, z <= N_SE, z, N_SE, f"estimate={mean!r} target={target!r} se={se!r}")


def _functions(vc: ValidationConfig):
    cfg = vc.network
    arith = NomographicFunction.arithmetic_mean(cfg.K, cfg.sensing, cfg.P_max)
    geo = NomographicFunction.geometric_mean(cfg.K, cfg.sensing, cfg.P_max, cfg.readings,
                                             vc.a, vc.s_prime)
    return arith, geo


def check_energy_identity(vc: ValidationConfig, fn: NomographicFunction) -> Check:
    cfg = vc.network
    rng = _rng(cfg.seed, 0)
    x = rng.uniform(vc.reading_lo, vc.reading_hi, cfg.K)
    frame = transmit_and_superimpose(cfg, fn, x, draw_phases(rng, cfg.K, cfg.M, cfg.phase_mode),
                                     draw_channel(rng, cfg))
    nd = decompose_noise(frame)
    energy = received_energy(frame)
    rebuilt = cfg.M * float(frame.powers[frame.retained].sum()) + nd.delta_total
    rel = abs(energy - rebuilt) / max(abs(energy), 1e-300)
    return Check("energy_identity", rel <= 1e-9, rel, 1e-9)


def check_orthogonality(vc: ValidationConfig) -> Check:
    cfg = vc.network
    if cfg.K > cfg.M:
        return Check("orthogonality", True, 0.0, 1e-9, "skipped: K > M")
    s = np.exp(1j * draw_phases(None, cfg.K, cfg.M, PhaseMode("orthogonal")))
    gram = np.conj(s) @ s.T
    off = float(np.max(np.abs(gram - np.diag(np.diag(gram)))))
    return Check("orthogonality", off <= 1e-9 * cfg.M, off, 1e-9 * cfg.M)


def check_noiseless_exactness(vc: ValidationConfig, fn: NomographicFunction, n: int = 200) -> Check:
    cfg = vc.network
    if cfg.K > cfg.M:
        return Check(f"noiseless_exactness_{fn.kind.value}", True, 0.0, EXACT_RTOL, "skipped: K > M")
    quiet = cfg.replace(sigma_N_sq=0.0, phase_mode=PhaseMode("orthogonal"), fading_mode="ideal")
    rng = _rng(cfg.seed, 1)
    phases = draw_phases(rng, cfg.K, cfg.M, quiet.phase_mode)
    worst = 0.0
    ok = True
    for x in rng.uniform(vc.reading_lo, vc.reading_hi, (n, cfg.K)):
        frame = transmit_and_superimpose(quiet, fn, x, phases, draw_channel(rng, quiet))
        f_hat = float(estimate(quiet, fn, received_energy(frame)))
        f = fn.evaluate(x)
        worst = max(worst, abs(f_hat - f) / max(abs(f), abs(fn.f_min), abs(fn.f_max)))
        ok &= exact_match(f_hat, f, fn)
    return Check(f"noiseless_exactness_{fn.kind.value}", ok, worst, EXACT_RTOL)


def check_moments(vc: ValidationConfig, fn: NomographicFunction) -> list[Check]:
    """Means, pairwise covariances and variance of the noise terms over random readings."""
    cfg = vc.network
    n = vc.n_frames
    rng = _rng(cfg.seed, 2)
    x = rng.uniform(vc.reading_lo, vc.reading_hi, (n, cfg.K))
    fr = batch_frames(cfg, reading_powers(fn, x), rng, n)
    d1, d2, d3 = fr["delta1"], fr["delta2"], fr["delta3"]
    sq = math.sqrt(n)
    out = [
        _zscore_check("mean_delta1", d1.mean(), 0.0, d1.std() / sq),
        _zscore_check("mean_delta2", d2.mean(), 0.0, d2.std() / sq),
        _zscore_check("mean_delta3", d3.mean(), cfg.M * cfg.sigma_N_sq, d3.std() / sq),
    ]
    for (na, a), (nb, b) in (((1, d1), (2, d2)), ((1, d1), (3, d3)), ((2, d2), (3, d3))):
        prod = (a - a.mean()) * (b - b.mean())
        out.append(_zscore_check(f"cov_delta{na}_delta{nb}", prod.mean(), 0.0, prod.std() / sq))
    delta = d1 + d2 + d3
    c = delta - delta.mean()
    v = float(np.mean(c**2))
    se_v = math.sqrt(max(float(np.mean(c**4)) - v * v, 0.0) / n)
    target = var_delta(cfg, fn, UniformIID(vc.reading_lo, vc.reading_hi))
    out.append(_zscore_check("var_delta", v * n / (n - 1), target, se_v))
    return out


def check_unbiased_arithmetic(vc: ValidationConfig, fn: NomographicFunction, n: int = 20_000) -> Check:
    cfg = vc.network
    rng = _rng(cfg.seed, 3)
    x = rng.uniform(vc.reading_lo, vc.reading_hi, cfg.K)
    fr = batch_frames(cfg, reading_powers(fn, x), rng, n)
    f_hat = estimate(cfg, fn, fr["energy"])
    return _zscore_check("unbiased_arithmetic", float(f_hat.mean()), fn.evaluate(x),
                         float(f_hat.std()) / math.sqrt(n))


def check_lambda(vc: ValidationConfig, fn: NomographicFunction) -> Check:
    """E{a^(Delta_3 / (alpha K M))} from Gamma(M, sigma^2) draws against the closed form."""
    cfg = vc.network
    try:
        lam = lambda_m(cfg, fn)
    except ConfigurationError as exc:
        return Check("lambda_oracle", False, float("nan"), 0.01, str(exc))
    d3 = _rng(cfg.seed, 4).gamma(cfg.M, cfg.sigma_N_sq, vc.n_lambda)
    mc = float(np.mean(np.power(fn.a, d3 / (fn.alpha * fn.K * cfg.M))))
    rel = abs(mc - lam) / lam
    return Check("lambda_oracle", rel < 0.01, rel, 0.01, f"mc={mc!r} closed_form={lam!r}")


def check_ks(vc: ValidationConfig, fn: NomographicFunction) -> list[Check]:
    cfg = vc.network
    rng = _rng(cfg.seed, 5)
    x = rng.uniform(vc.reading_lo, vc.reading_hi, cfg.K)
    d = gaussian_approx_check(cfg, fn, x, vc.n_ks, rng)
    g = gamma_normal_ks(cfg.M)
    return [Check("ks_delta_gaussian", d < KS_LIMIT, d, KS_LIMIT),
            Check("ks_gamma_normal", g < KS_LIMIT, g, KS_LIMIT)]


def check_fairness_identity(vc: ValidationConfig, fn: NomographicFunction) -> Check:
    cfg = vc.network
    tdma = TdmaConfig(vc.Q)
    M = tdma.fair_M(cfg.K)
    fair = cfg.replace(M=M)
    check_fairness(fair, tdma)
    x = _rng(cfg.seed, 6).uniform(vc.reading_lo, vc.reading_hi, cfg.K)
    p = reading_powers(fn, x)
    e_comac = M * p * tdma.T
    e_tdma = tdma.slots_per_node * tdma.slot_power(p, M) * tdma.T
    rel = float(np.max(np.abs(e_comac - e_tdma) / np.maximum(e_comac, 1e-300)))
    return Check("fairness_energy", rel <= 1e-12, rel, 1e-12, f"M={M}")


def check_ber(vc: ValidationConfig, power_ratio: float = 1.0) -> Check:
    cfg = vc.network.replace(sigma_N_sq=1.0)
    rng = _rng(vc.network.seed, 7)
    bits = rng.integers(0, 2, vc.n_bits)
    rx = transmit_bits(rng, cfg, TdmaConfig(vc.Q), power_ratio, bits)
    ber = float(np.mean(rx != bits))
    p = float(ber_theory(power_ratio, 1.0))
    return _zscore_check(f"ber_ratio_{power_ratio!r}", ber, p, math.sqrt(p * (1 - p) / vc.n_bits))


def run_validation_suite(vc: ValidationConfig) -> ValidationReport:
    arith, geo = _functions(vc)
    report = ValidationReport()
    add = report.checks.append
    add(check_energy_identity(vc, arith))
    add(check_orthogonality(vc))
    add(check_noiseless_exactness(vc, arith))
    add(check_noiseless_exactness(vc, geo))
    report.checks.extend(check_moments(vc, arith))
    add(check_unbiased_arithmetic(vc, arith))
    add(check_lambda(vc, geo))
    report.checks.extend(check_ks(vc, arith))
    add(check_fairness_identity(vc, arith))
    add(check_ber(vc))
    return report
