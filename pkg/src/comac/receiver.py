"""Fusion-center side: energy detection, estimators and error normalization.

The estimators take the scalar received energy only. ``decompose_noise``
needs the full frame and therefore only exists on the simulation side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import lambda_m
from .channel import FrameRealization
from .model import (DomainError, FunctionKind, NetworkConfig, NomographicFunction,
                    postprocess, unmap_energy)


@dataclass(frozen=True)
class NoiseDecomposition:
    delta1: float
    delta2: float
    delta3: float

    @property
    def delta_total(self) -> float:
        return self.delta1 + self.delta2 + self.delta3


def received_energy(frame: FrameRealization) -> float:
    y = frame.received
    return float(np.sum(y.real**2 + y.imag**2))


def decompose_noise(frame: FrameRealization) -> NoiseDecomposition:
    """Evaluate the three noise terms term by term from the frame's ground truth."""
    keep = frame.retained
    a = np.sqrt(frame.powers[keep])[:, None] * frame.effective_symbols[keep]  # (K', M)
    gram = np.conj(a) @ a.T  # gram[k, l] = a_k^H a_l
    delta1 = float(np.real(gram.sum() - np.trace(gram)))
    n = frame.channel.noise
    delta2 = float(2.0 * np.sum(np.real(np.conj(a) @ n)))
    delta3 = float(np.sum(n.real**2 + n.imag**2))
    return NoiseDecomposition(delta1, delta2, delta3)


def plain_estimate(fn: NomographicFunction, energy, M: int):
    """psi(h(energy)) with no bias correction."""
    return postprocess(fn, unmap_energy(fn, energy, M))


def estimate_arithmetic(cfg: NetworkConfig, fn: NomographicFunction, energy):
    """Unbiased arithmetic-mean estimate from the received energy.

    The subtracted constant is E{psi(Delta_3 / (alpha M))} = sigma_N^2 / (alpha K).
    """
    if fn.kind is not FunctionKind.ARITHMETIC_MEAN:
        raise DomainError(f"estimate_arithmetic called with {fn.kind.value}")
    return plain_estimate(fn, energy, cfg.M) - cfg.sigma_N_sq / (fn.alpha * fn.K)


def estimate_geometric(cfg: NetworkConfig, fn: NomographicFunction, energy):
    """Geometric-mean estimate psi(h(energy)) / lambda_M.

    Raises LambdaExistenceError when sigma_N^2 ln a >= alpha K M.
    """
    if fn.kind is not FunctionKind.GEOMETRIC_MEAN:
        raise DomainError(f"estimate_geometric called with {fn.kind.value}")
    return plain_estimate(fn, energy, cfg.M) / lambda_m(cfg, fn)


def estimate_unbiased_geometric_reference(cfg: NetworkConfig, fn: NomographicFunction,
                                          energy, mc_denominator: float):
    """Reference estimator dividing by a Monte Carlo estimate of E{psi(Delta/(alpha M))}.

    Needs ground truth to build the denominator, so it is a simulation
    benchmark only.
    """
    if not mc_denominator > 0:
        raise DomainError(f"mc_denominator must be > 0, got {mc_denominator}")
    return plain_estimate(fn, energy, cfg.M) / mc_denominator


def estimate(cfg: NetworkConfig, fn: NomographicFunction, energy):
    """Dispatch to the calibrated estimator; other kinds get plain post-processing."""
    if fn.kind is FunctionKind.ARITHMETIC_MEAN:
        return estimate_arithmetic(cfg, fn, energy)
    if fn.kind is FunctionKind.GEOMETRIC_MEAN:
        return estimate_geometric(cfg, fn, energy)
    return plain_estimate(fn, energy, cfg.M)


def normalized_error(fn: NomographicFunction, f_hat, x=None, f_true=None):
    """(f_hat - f(x)) / (f_max - f_min) over the function's extension domain."""
    if f_true is None:
        f_true = fn.evaluate(x)
    return (f_hat - f_true) / fn.f_range
