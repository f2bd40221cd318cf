"""Speech enhancement workloads: power spectral subtraction and an oracle
Wiener filter, plus residual-noise definitions for both.

Both enhancers share a 1024-point STFT with 50% overlap. Analysis and
synthesis windows are square-root periodic Hann, so their product sums to
exactly one across overlapping frames and unit gain reconstructs the input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_io import AudioSignal

FFT_SIZE = 1024


def sqrt_hann(n: int) -> np.ndarray:
    return np.sqrt(0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n))


def check_cola(window: np.ndarray, hop: int, tol: float = 1e-10) -> bool:
    """True if the squared window overlap-adds to a constant at `hop`."""
    n = window.size
    if n % hop:
        return False
    acc = np.zeros(hop)
    for k in range(n // hop):
        acc += window[k * hop:(k + 1) * hop] ** 2
    return bool(np.all(np.abs(acc - acc[0]) < tol) and abs(acc[0] - 1.0) < tol)


def stft(x: np.ndarray, n_fft: int = FFT_SIZE, hop: int = FFT_SIZE // 2) -> np.ndarray:
    """Frames of the zero-padded signal, shape (frame, bin)."""
    x = np.asarray(x, dtype=float)
    w = sqrt_hann(n_fft)
    lead = n_fft - hop
    total = lead + x.size + lead
    total += (-(total - n_fft)) % hop
    padded = np.zeros(total)
    padded[lead:lead + x.size] = x
    n_frames = (total - n_fft) // hop + 1
    idx = np.arange(n_fft)[None, :] + hop * np.arange(n_frames)[:, None]
    return np.fft.rfft(padded[idx] * w, axis=-1)


def istft(spec: np.ndarray, length: int, n_fft: int = FFT_SIZE,
          hop: int = FFT_SIZE // 2) -> np.ndarray:
    w = sqrt_hann(n_fft)
    frames = np.fft.irfft(spec, n_fft, axis=-1) * w
    n_frames = frames.shape[0]
    out = np.zeros(hop * (n_frames - 1) + n_fft)
    for t in range(n_frames):
        out[t * hop:t * hop + n_fft] += frames[t]
    lead = n_fft - hop
    return out[lead:lead + length]


@dataclass(frozen=True)
class SpecSubConfig:
    alpha: float = 1.0
    beta: float = 0.01
    fft_size: int = FFT_SIZE
    hop: int = FFT_SIZE // 2

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if not check_cola(sqrt_hann(self.fft_size), self.hop):
            raise ValueError(
                f"fft_size={self.fft_size}, hop={self.hop} does not reconstruct perfectly")


@dataclass(frozen=True)
class WienerConfig:
    epsilon: float = 0.0
    fft_size: int = FFT_SIZE
    hop: int = FFT_SIZE // 2

    def __post_init__(self):
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if not check_cola(sqrt_hann(self.fft_size), self.hop):
            raise ValueError(
                f"fft_size={self.fft_size}, hop={self.hop} does not reconstruct perfectly")


def subtract_power(P_SN, P_N_hat, alpha: float = 1.0, beta: float = 0.01) -> np.ndarray:
    """Per-bin power subtraction with over-subtraction `alpha` and floor `beta`."""
    P_SN = np.asarray(P_SN, dtype=float)
    P_N_hat = np.asarray(P_N_hat, dtype=float)
    keep = P_SN > (alpha + beta) * P_N_hat
    return np.where(keep, P_SN - alpha * P_N_hat, beta * P_N_hat)


def spectral_subtract(noisy: AudioSignal, noise_estimate: AudioSignal,
                      cfg: SpecSubConfig = SpecSubConfig()) -> AudioSignal:
    """Power spectral subtraction keeping the noisy phase.

    The noise power spectrum is the frame average of `noise_estimate`'s
    periodogram, so any excerpt of the noise (or a non-speech stretch of
    the recording) can serve as the estimate.
    """
    if noisy.sample_rate != noise_estimate.sample_rate:
        raise ValueError("sample-rate mismatch")
    X = stft(noisy.samples, cfg.fft_size, cfg.hop)
    P_N_hat = np.mean(np.abs(stft(noise_estimate.samples, cfg.fft_size, cfg.hop)) ** 2, axis=0)
    P_SN = np.abs(X) ** 2
    mag = np.sqrt(subtract_power(P_SN, P_N_hat, cfg.alpha, cfg.beta))
    Y = mag * np.exp(1j * np.angle(X))
    return noisy.with_samples(istft(Y, len(noisy), cfg.fft_size, cfg.hop))


def wiener_gain(P_S, P_N) -> np.ndarray:
    """P_S / (P_S + P_N), taken as 1 where both powers vanish."""
    P_S = np.asarray(P_S, dtype=float)
    P_N = np.asarray(P_N, dtype=float)
    den = P_S + P_N
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, P_S / np.where(den > 0, den, 1.0), 1.0)


def oracle_wiener(noisy: AudioSignal, clean: AudioSignal, noise: AudioSignal,
                  cfg: WienerConfig = WienerConfig()) -> AudioSignal:
    """Wiener filtering with gains from the true clean and noise spectra.

    The applied gain is max(G, epsilon): larger `epsilon` leaves more
    residual noise.
    """
    if not (len(noisy) == len(clean) == len(noise)):
        raise ValueError("duration mismatch between noisy, clean and noise")
    if not (noisy.sample_rate == clean.sample_rate == noise.sample_rate):
        raise ValueError("sample-rate mismatch")
    X = stft(noisy.samples, cfg.fft_size, cfg.hop)
    P_S = np.abs(stft(clean.samples, cfg.fft_size, cfg.hop)) ** 2
    P_N = np.abs(stft(noise.samples, cfg.fft_size, cfg.hop)) ** 2
    G = np.maximum(wiener_gain(P_S, P_N), cfg.epsilon)
    return noisy.with_samples(istft(G * X, len(noisy), cfg.fft_size, cfg.hop))


def residual_noise_ss(P_N, P_N_hat, alpha: float = 1.0, return_flag: bool = False):
    """Residual noise after subtraction: P_N - alpha * P_N_hat.

    Negative values are kept as they are. With `return_flag`, also returns
    whether any bin went negative.
    """
    P_N = np.asarray(P_N, dtype=float)
    P_N_hat = np.asarray(P_N_hat, dtype=float)
    if P_N.shape != P_N_hat.shape:
        raise ValueError("length mismatch")
    if np.any(P_N < 0) or np.any(P_N_hat < 0):
        raise ValueError("power spectra must be non-negative")
    out = P_N - alpha * P_N_hat
    if return_flag:
        return out, bool(np.any(out < 0))
    return out


def residual_noise_wf(P_N, G, P_SN=None, mode: str = "gain") -> np.ndarray:
    """Residual noise for a gain-based enhancer.

    mode="gain": G * P_N.  mode="subtract": P_N - G * P_SN.
    """
    P_N = np.asarray(P_N, dtype=float)
    G = np.asarray(G, dtype=float)
    if np.any(G < 0) or np.any(G > 1):
        raise ValueError("gain must lie in [0, 1]")
    if G.shape != P_N.shape and G.ndim:
        raise ValueError("length mismatch")
    if mode == "gain":
        return G * P_N
    if mode == "subtract":
        if P_SN is None:
            raise ValueError("mode='subtract' needs the noisy power spectrum")
        P_SN = np.asarray(P_SN, dtype=float)
        if P_SN.shape != P_N.shape:
            raise ValueError("length mismatch")
        return P_N - G * P_SN
    raise ValueError(f"unknown mode {mode!r}")
