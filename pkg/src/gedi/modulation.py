"""Modulation-domain analysis for GEDI and mr-GEDI.

Two filterbanks over envelope fluctuation frequency:

* `GediModBank`: seven power responses applied to the FFT of the whole
  envelope: a 3rd-order Butterworth lowpass at 1 Hz and Q=1 second-order
  bandpasses at 2..64 Hz.
* `MrModBank`: nine causal IIR filters (3rd-order Butterworth lowpass at
  1 Hz, Q=1 resonators at 2..256 Hz) whose outputs are cut into frames
  lasting one period of the filter's center frequency.

Envelope powers are expressed relative to the enhanced-envelope DC so that
a fully (100%) sinusoidally modulated envelope has power 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import fft as sp_fft
from scipy import signal as sps

GEDI_FLOOR = 0.01
MR_GEDI_FLOOR = 0.001


@dataclass(frozen=True)
class GediModBank:
    center_freqs: tuple = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    q: float = 1.0
    lowpass_order: int = 3

    @property
    def n_filters(self) -> int:
        return len(self.center_freqs)

    def power_response(self, f) -> np.ndarray:
        """Power responses W_j(f), shape (filter, freq)."""
        f = np.atleast_1d(np.asarray(f, dtype=float))
        out = np.empty((self.n_filters, f.size))
        out[0] = 1.0 / (1.0 + (f / self.center_freqs[0]) ** (2 * self.lowpass_order))
        with np.errstate(divide="ignore"):
            for j, fc in enumerate(self.center_freqs[1:], start=1):
                detune = np.where(f > 0, f / fc - fc / np.where(f > 0, f, 1.0), -np.inf)
                out[j] = 1.0 / (1.0 + (self.q * detune) ** 2)
        return out


@dataclass(frozen=True)
class MrModBank:
    center_freqs: tuple = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)
    q: float = 1.0
    lowpass_order: int = 3

    @property
    def n_filters(self) -> int:
        return len(self.center_freqs)

    def sos(self, sample_rate: int) -> List[np.ndarray]:
        if sample_rate <= 2 * max(self.center_freqs):
            raise ValueError(
                f"envelope rate {sample_rate} Hz too low for a {max(self.center_freqs)} Hz band")
        sections = [sps.butter(self.lowpass_order, self.center_freqs[0],
                               fs=sample_rate, output="sos")]
        for fc in self.center_freqs[1:]:
            b, a = sps.iirpeak(fc, self.q, fs=sample_rate)
            sections.append(sps.tf2sos(b, a))
        return sections


@dataclass
class ModulationPowerTensor:
    """Normalized envelope powers.

    For GEDI `S` and `D` have shape (channel, filter). For mr-GEDI they are
    lists over filters of (channel, frame) arrays, since the frame count
    depends on the filter.
    """

    S: object
    D: object
    floor: float
    floor_applied: bool = True
    frame_bounds: Optional[list] = field(default=None, repr=False)


def one_sided_power(envelope: np.ndarray):
    """Power of each positive-frequency sinusoidal component of `envelope`.

    Returns (component_power, mean) with component_power covering bins
    1..N//2. The component powers sum to the envelope variance.
    """
    n = envelope.shape[-1]
    spec = sp_fft.rfft(envelope, axis=-1)
    power = 2.0 * np.abs(spec[..., 1:]) ** 2 / n ** 2
    if n % 2 == 0:
        power[..., -1] /= 2.0
    return power, spec[..., 0].real / n


def gedi_env_power(envelope, dc_ref, sample_rate: int,
                   bank: GediModBank = GediModBank(), floor: float = GEDI_FLOOR,
                   apply_floor: bool = True) -> np.ndarray:
    """Envelope power in each GEDI modulation filter.

    Sum over positive FFT bins of the component power times the filter's
    power response, divided by dc_ref**2 / 2 where dc_ref is the mean of
    the enhanced envelope. Accepts one envelope or a (channel, sample)
    matrix with one `dc_ref` per channel.
    """
    envelope = np.asarray(envelope, dtype=float)
    dc_ref = np.asarray(dc_ref, dtype=float)
    if np.any(dc_ref <= 0):
        raise ValueError("dc_ref must be positive (silent enhanced channel)")
    n = envelope.shape[-1]
    power, _ = one_sided_power(envelope)
    freqs = np.arange(1, n // 2 + 1) * sample_rate / n
    weights = bank.power_response(freqs)                 # (J, K)
    p = power @ weights.T                                # (..., J)
    p = p / (dc_ref[..., None] ** 2 / 2.0)
    return np.maximum(p, floor) if apply_floor else p


def mr_filter(envelope, sample_rate: int, bank: MrModBank = MrModBank()) -> np.ndarray:
    """Filter envelope(s) with the IIR bank. Output shape (filter, ..., sample)."""
    envelope = np.asarray(envelope, dtype=float)
    return np.stack([sps.sosfilt(sos, envelope, axis=-1) for sos in bank.sos(sample_rate)])


def segment_frames(n_samples: int, center_freq: float, sample_rate: int):
    """Boundaries of non-overlapping frames lasting 1/center_freq.

    The frame length is capped at the signal duration; a trailing partial
    frame is kept. Returns a list of (start, stop) sample indices.
    """
    if center_freq <= 0:
        raise ValueError("center_freq must be positive")
    if n_samples <= 0:
        raise ValueError("empty band signal")
    frame = min(int(round(sample_rate / center_freq)), n_samples)
    return [(s, min(s + frame, n_samples)) for s in range(0, n_samples, frame)]


def mr_frame_power(band_frame, dc_ref, floor: float = MR_GEDI_FLOOR,
                   apply_floor: bool = True):
    """Frame variance divided by dc_ref**2 / 2, floored at -30 dB."""
    band_frame = np.asarray(band_frame, dtype=float)
    dc_ref = np.asarray(dc_ref, dtype=float)
    if band_frame.shape[-1] == 0:
        raise ValueError("empty frame")
    if np.any(dc_ref <= 0):
        raise ValueError("dc_ref must be positive (silent enhanced channel)")
    p = np.var(band_frame, axis=-1) / (dc_ref ** 2 / 2.0)
    return np.maximum(p, floor) if apply_floor else p


def _framed_variance(x: np.ndarray, frame: int) -> np.ndarray:
    n = x.shape[-1]
    m = n // frame
    parts = []
    if m:
        parts.append(x[..., :m * frame].reshape(x.shape[:-1] + (m, frame)).var(axis=-1))
    if n - m * frame:
        parts.append(x[..., m * frame:].var(axis=-1)[..., None])
    return np.concatenate(parts, axis=-1)


def mr_env_powers(band_signals: np.ndarray, dc_ref: np.ndarray, sample_rate: int,
                  bank: MrModBank = MrModBank(), floor: float = MR_GEDI_FLOOR):
    """Framed powers for every filter.

    `band_signals` has shape (filter, channel, sample). Returns the list of
    (channel, frame) power arrays and the frame bounds per filter.
    """
    dc_ref = np.asarray(dc_ref, dtype=float)
    if np.any(dc_ref <= 0):
        raise ValueError("dc_ref must be positive (silent enhanced channel)")
    n = band_signals.shape[-1]
    norm = (dc_ref ** 2 / 2.0)[:, None]
    powers, bounds = [], []
    for j, fc in enumerate(bank.center_freqs):
        fb = segment_frames(n, fc, sample_rate)
        frame = fb[0][1] - fb[0][0]
        powers.append(np.maximum(_framed_variance(band_signals[j], frame) / norm, floor))
        bounds.append(fb)
    return powers, bounds
