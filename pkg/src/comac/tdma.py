"""Idealized uncoded TDMA baseline under the CoMAC fairness conditions.

Each node quantizes its reading uniformly over the sensing range with Q
bits (natural binary, MSB first), sends them by BPSK in interference-free
slots on an ideal channel, and the fusion center evaluates the desired
function on the midpoint reconstructions.

Fairness: equal time gives M = (Q + R) K symbols per function value, equal
energy gives the per-slot power P_tdma_k = P_k M / (Q + R). R counts
overhead slots per node and defaults to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .analysis import expected_power
from .model import (ConfigurationError, DomainError, EstimateResult, FunctionKind,
                    NetworkConfig, NomographicFunction, SensingRange, reading_powers)
from .readings import ReadingDistribution


@dataclass(frozen=True)
class TdmaConfig:
    Q: int
    T: float = 1.0
    R: int = 0

    def __post_init__(self):
        if int(self.Q) != self.Q or self.Q < 1:
            raise ConfigurationError(f"Q must be a positive integer, got {self.Q}")
        if not self.T > 0:
            raise ConfigurationError(f"symbol duration T must be > 0, got {self.T}")
        if int(self.R) != self.R or self.R < 0:
            raise ConfigurationError(f"R must be a nonnegative integer, got {self.R}")

    @property
    def slots_per_node(self) -> int:
        return self.Q + self.R

    def fair_M(self, K: int) -> int:
        """CoMAC sequence length matching the TDMA airtime."""
        return self.slots_per_node * K

    def slot_power(self, powers, M: int):
        """Instantaneous TDMA power with the same per-node energy as CoMAC."""
        return np.asarray(powers, dtype=float) * M / self.slots_per_node


def check_fairness(cfg: NetworkConfig, tdma: TdmaConfig) -> None:
    if cfg.M != tdma.fair_M(cfg.K):
        raise ConfigurationError(
            f"fairness needs M = (Q + R) K = {tdma.fair_M(cfg.K)}, got M = {cfg.M}")


def step_size(sensing: SensingRange, Q: int) -> float:
    return sensing.width / 2**Q


def quantize(sensing: SensingRange, Q: int, x):
    """Cell index of a uniform 2^Q-cell quantizer over the sensing range."""
    x = np.asarray(x, dtype=float)
    if np.any(x < sensing.s_min) or np.any(x > sensing.s_max):
        raise DomainError(f"reading outside sensing range [{sensing.s_min}, {sensing.s_max}]")
    code = np.floor((x - sensing.s_min) / step_size(sensing, Q)).astype(np.int64)
    code = np.minimum(code, 2**Q - 1)
    return code if code.ndim else int(code)


def reconstruct(sensing: SensingRange, Q: int, code):
    """Midpoint of the quantizer cell."""
    c = np.asarray(code)
    if np.any(c < 0) or np.any(c >= 2**Q):
        raise DomainError(f"code out of range [0, {2**Q})")
    out = sensing.s_min + (c + 0.5) * step_size(sensing, Q)
    return out if np.ndim(out) else float(out)


def to_bits(code, Q: int) -> np.ndarray:
    """Natural binary, MSB first; (..., Q) array of 0/1."""
    shifts = np.arange(Q - 1, -1, -1)
    return (np.asarray(code, dtype=np.int64)[..., None] >> shifts) & 1


def from_bits(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    Q = bits.shape[-1]
    return bits @ (1 << np.arange(Q - 1, -1, -1))


def transmit_bits(rng: np.random.Generator, cfg: NetworkConfig, tdma: TdmaConfig,
                  P_tdma_k, bits) -> np.ndarray:
    """BPSK over interference-free slots; sign detection on the real part.

    ``P_tdma_k`` broadcasts against ``bits`` along the leading axes. A
    received value of exactly zero (zero power and no noise) is a fair
    coin flip.
    """
    bits = np.asarray(bits)
    amp = np.sqrt(np.asarray(P_tdma_k, dtype=float))
    if amp.ndim and amp.ndim < bits.ndim:
        amp = amp[..., None]
    tx = amp * (2.0 * bits - 1.0)
    noise = rng.standard_normal((2,) + bits.shape) * math.sqrt(cfg.sigma_N_sq / 2.0)
    r = tx + noise[0]  # noise[1] is the quadrature part, ignored by the detector
    out = (r > 0).astype(np.int64)
    ties = r == 0
    if np.any(ties):
        out[ties] = rng.integers(0, 2, size=int(ties.sum()))
    return out


def ber_theory(P, sigma_N_sq):
    """1/2 erfc(sqrt(P / sigma^2))."""
    return 0.5 * erfc(np.sqrt(np.asarray(P, dtype=float) / sigma_N_sq))


def tdma_trial(rng: np.random.Generator, cfg: NetworkConfig, fn: NomographicFunction,
               tdma: TdmaConfig, readings) -> EstimateResult:
    """One function value computed the TDMA way."""
    x = np.asarray(readings, dtype=float)
    sensing = fn.sensing
    Q = tdma.Q
    code = quantize(sensing, Q, x)
    p_slot = tdma.slot_power(reading_powers(fn, x), cfg.M)
    bits_rx = transmit_bits(rng, cfg, tdma, p_slot, to_bits(code, Q))
    x_hat = reconstruct(sensing, Q, from_bits(bits_rx))
    clamped = 0
    if fn.kind is FunctionKind.GEOMETRIC_MEAN or fn.kind is FunctionKind.Q_NORM:
        lo, hi = fn.domain
        clamped = int(np.sum((x_hat < lo) | (x_hat > hi)))
        x_hat = np.clip(x_hat, lo, hi)
    f_hat = fn.evaluate(x_hat)
    f_true = fn.evaluate(x)
    return EstimateResult(f_hat, f_true, (f_hat - f_true) / fn.f_range, 0, clamped)


def snr_operating_point(cfg: NetworkConfig, fn: NomographicFunction, tdma: TdmaConfig,
                        readings: ReadingDistribution) -> float:
    """Average received TDMA SNR per node, 2 M E{P_1} / (sigma^2 (Q + R)), linear."""
    if cfg.sigma_N_sq == 0:
        raise ConfigurationError("SNR_f is undefined for sigma_N_sq = 0")
    return 2.0 * cfg.M * expected_power(fn, readings) / (cfg.sigma_N_sq * tdma.slots_per_node)


def sigma_sq_for_snr(cfg: NetworkConfig, fn: NomographicFunction, tdma: TdmaConfig,
                     readings: ReadingDistribution, snr_db: float) -> float:
    """Noise variance that puts the system at the given SNR_f (dB)."""
    snr = 10.0 ** (snr_db / 10.0)
    return 2.0 * cfg.M * expected_power(fn, readings) / (tdma.slots_per_node * snr)
