"""Transmit sequences, channel/noise draws and the W-MAC superposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (DomainError, FadingMode, FrameError, NetworkConfig,
                    NomographicFunction, PhaseMode, reading_powers)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseSequence:
    phases: np.ndarray

    @property
    def symbols(self) -> np.ndarray:
        return np.exp(1j * np.asarray(self.phases, dtype=float))

    def __len__(self) -> int:
        return len(self.phases)


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray  # (K, M) complex
    noise: np.ndarray  # (M,) complex


@dataclass(frozen=True)
class FrameRealization:
    readings: np.ndarray
    powers: np.ndarray
    phases: np.ndarray  # (K, M)
    channel: ChannelRealization
    received: np.ndarray
    excluded: frozenset

    @property
    def sequences(self) -> list[PhaseSequence]:
        return [PhaseSequence(row) for row in self.phases]

    @property
    def retained(self) -> np.ndarray:
        mask = np.ones(len(self.powers), dtype=bool)
        mask[list(self.excluded)] = False
        return mask

    @property
    def effective_symbols(self) -> np.ndarray:
        """Per-symbol phasors seen at the receiver: S_k[m] H_k[m] / |H_k[m]|."""
        h = self.channel.gains
        return np.exp(1j * np.asarray(self.phases, dtype=float)) * h / np.abs(h)

    @property
    def M(self) -> int:
        return self.phases.shape[1]


def draw_phases(rng: np.random.Generator, K: int, M: int, phase_mode: PhaseMode,
                dtype=np.float64) -> np.ndarray:
    """(K, M) array of transmit phases."""
    if M < 1:
        raise DomainError(f"sequence length must be >= 1, got {M}")
    if phase_mode.kind == "continuous":
        th = rng.random((K, M), dtype=dtype)
        th *= dtype(TWO_PI)
        # float32 rounding can land exactly on 2 pi
        if dtype is not np.float64:
            th[th >= dtype(TWO_PI)] = 0
        return th
    if phase_mode.kind == "discrete":
        j = rng.integers(0, phase_mode.L, size=(K, M))
        return (TWO_PI / phase_mode.L * j).astype(dtype)
    k = np.arange(K)[:, None]
    m = np.arange(M)[None, :]
    return (TWO_PI * ((k * m) % M) / M).astype(dtype)


def draw_sequence(rng: np.random.Generator, M: int, phase_mode: PhaseMode, node: int = 0) -> PhaseSequence:
    """One node's sequence. ``node`` only matters for orthogonal sequences."""
    if phase_mode.kind == "orthogonal":
        return PhaseSequence(TWO_PI * ((node * np.arange(M)) % M) / M)
    return PhaseSequence(draw_phases(rng, 1, M, phase_mode)[0])


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with E|z|^2 = variance."""
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return np.sqrt(variance / 2.0) * (z[0] + 1j * z[1])


def draw_gains(rng: np.random.Generator, cfg: NetworkConfig) -> np.ndarray:
    if cfg.fading_mode is FadingMode.IDEAL:
        return np.ones((cfg.K, cfg.M), dtype=complex)
    return complex_gaussian(rng, (cfg.K, cfg.M), 1.0)


def draw_noise(rng: np.random.Generator, cfg: NetworkConfig) -> np.ndarray:
    if cfg.sigma_N_sq == 0:
        return np.zeros(cfg.M, dtype=complex)
    return complex_gaussian(rng, cfg.M, cfg.sigma_N_sq)


def draw_channel(rng: np.random.Generator, cfg: NetworkConfig,
                 noise_rng: np.random.Generator | None = None) -> ChannelRealization:
    """Fading gains and receiver noise; ``noise_rng`` lets noise use its own stream."""
    gains = draw_gains(rng, cfg)
    noise = draw_noise(rng if noise_rng is None else noise_rng, cfg)
    return ChannelRealization(gains, noise)


def excluded_nodes(powers: np.ndarray, gains: np.ndarray, P_max: float) -> np.ndarray:
    """Boolean mask of nodes that cannot invert their channel within P_max."""
    min_gain_sq = np.min(np.abs(gains) ** 2, axis=-1)
    with np.errstate(divide="ignore"):
        need = np.where(powers > 0, powers / min_gain_sq, 0.0)
    return need > P_max


def transmit_and_superimpose(cfg: NetworkConfig, fn: NomographicFunction, readings,
                             sequences, channel: ChannelRealization) -> FrameRealization:
    """Run the transmitters and the channel for one measurement instant.

    ``sequences`` is a (K, M) phase array or a list of PhaseSequence.
    In rayleigh mode node k sends sqrt(P_k)/|H_k[m]| * S_k[m] (amplitude-only
    inversion); nodes that would exceed P_max on any symbol are silent for
    the whole frame.
    """
    x = np.asarray(readings, dtype=float)
    if x.shape != (cfg.K,):
        raise DomainError(f"expected {cfg.K} readings, got shape {x.shape}")
    if isinstance(sequences, np.ndarray):
        phases = sequences
    else:
        phases = np.stack([np.asarray(s.phases) for s in sequences])
    if phases.shape != (cfg.K, cfg.M):
        raise DomainError(f"sequences must be ({cfg.K}, {cfg.M}), got {phases.shape}")

    powers = reading_powers(fn, x)
    gains = channel.gains
    drop = excluded_nodes(powers, gains, cfg.P_max)
    if drop.all():
        raise FrameError("every node was excluded by the peak power constraint")

    amp = np.sqrt(powers)[:, None] / np.abs(gains)
    w = amp * np.exp(1j * np.asarray(phases, dtype=float))
    w[drop] = 0.0
    received = np.sum(gains * w, axis=0) + channel.noise
    return FrameRealization(x, powers, phases, channel, received,
                            frozenset(np.flatnonzero(drop).tolist()))


def superimposed_energy(amplitudes: np.ndarray, phases: np.ndarray, noise: np.ndarray) -> float:
    """||sum_k a_k exp(i theta_k) + N||^2 without materializing complex arrays.

    Trig and the K-sum run in ``phases.dtype`` (float32 in bulk experiments);
    the energy is accumulated in float64.
    """
    a = np.asarray(amplitudes, dtype=phases.dtype)
    re = (a @ np.cos(phases)).astype(np.float64) + noise.real
    im = (a @ np.sin(phases)).astype(np.float64) + noise.imag
    return float(re @ re + im @ im)


def frame_energy_fast(cfg: NetworkConfig, powers: np.ndarray, seq_rng, chan_rng, noise_rng,
                      dtype=np.float32) -> tuple[float, float, int]:
    """(received energy, sum of retained powers, number of excluded nodes).

    Statistically the same frame as ``transmit_and_superimpose`` but skips
    building the FrameRealization. With amplitude-only inversion every node
    arrives with amplitude sqrt(P_k) and phase theta_k + arg H_k.
    """
    phases = draw_phases(seq_rng, cfg.K, cfg.M, cfg.phase_mode, dtype)
    n_excluded = 0
    powers = np.asarray(powers, dtype=float)
    amps = np.sqrt(powers)
    if cfg.fading_mode is FadingMode.RAYLEIGH_INVERTED:
        gains = draw_gains(chan_rng, cfg)
        drop = excluded_nodes(powers, gains, cfg.P_max)
        if drop.all():
            raise FrameError("every node was excluded by the peak power constraint")
        n_excluded = int(drop.sum())
        amps = np.where(drop, 0.0, amps)
        powers = np.where(drop, 0.0, powers)
        phases = phases + np.angle(gains).astype(dtype)
    noise = draw_noise(noise_rng, cfg)
    return superimposed_energy(amps, phases, noise), float(powers.sum()), n_excluded


def batch_frames(cfg: NetworkConfig, powers: np.ndarray, rng: np.random.Generator, n: int,
                 chunk_elems: int = 2_000_000, dtype=np.float64) -> dict[str, np.ndarray]:
    """Energies and exact noise terms for ``n`` ideal-channel frames sharing one stream.

    ``powers`` is (K,) or (n, K). Returns arrays ``energy``, ``delta1``,
    ``delta2``, ``delta3``. Used by validation and moment checks where the
    per-trial stream contract is not needed. ``dtype`` sets the precision of
    the phases and trig, as in ``frame_energy_fast``.
    """
    K, M = cfg.K, cfg.M
    P_all = np.broadcast_to(np.asarray(powers, dtype=float), (n, K))
    step = max(1, chunk_elems // (K * M))
    out = {k: np.empty(n) for k in ("energy", "delta1", "delta2", "delta3")}
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        P = P_all[lo:hi]
        if cfg.phase_mode.kind == "orthogonal":
            th = np.broadcast_to(draw_phases(rng, K, M, cfg.phase_mode, dtype), (hi - lo, K, M))
        else:
            th = draw_phases(rng, (hi - lo) * K, M, cfg.phase_mode, dtype).reshape(hi - lo, K, M)
        noise = draw_noise_batch(rng, cfg, hi - lo)
        amps = np.sqrt(P).astype(dtype)[:, None, :]
        s_re = (amps @ np.cos(th))[:, 0, :].astype(np.float64)
        s_im = (amps @ np.sin(th))[:, 0, :].astype(np.float64)
        y_re = s_re + noise.real
        y_im = s_im + noise.imag
        out["energy"][lo:hi] = np.sum(y_re * y_re + y_im * y_im, axis=1)
        # sum_{k != l} a_k^* a_l per symbol equals |sum_k a_k|^2 - sum_k |a_k|^2
        out["delta1"][lo:hi] = np.sum(s_re * s_re + s_im * s_im, axis=1) - M * P.sum(axis=1)
        out["delta2"][lo:hi] = 2.0 * np.sum(s_re * noise.real + s_im * noise.imag, axis=1)
        out["delta3"][lo:hi] = np.sum(noise.real**2 + noise.imag**2, axis=1)
    return out


def draw_noise_batch(rng: np.random.Generator, cfg: NetworkConfig, n: int) -> np.ndarray:
    if cfg.sigma_N_sq == 0:
        return np.zeros((n, cfg.M), dtype=complex)
    return complex_gaussian(rng, (n, cfg.M), cfg.sigma_N_sq)
