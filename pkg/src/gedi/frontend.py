"""Auditory front end: ERB scale, gammachirp filterbank, temporal envelopes.

The filterbank is a linear gammachirp approximation of the dynamic
compressive gammachirp. Each channel is a 4th-order gammachirp whose
bandwidth follows ERB_N at its center frequency and whose carrier is
shifted so that the amplitude response peaks exactly on that center.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import signal as sps
from scipy.fft import irfft, next_fast_len, rfft

from .signal_io import AudioSignal, DEFAULT_SAMPLE_RATE

ERB_C1 = 24.7          # Hz
ERB_C2 = 4.37 / 1000   # 1/Hz
CAM_SCALE = 21.4

ENVELOPE_CUTOFF_HZ = 150.0
ENVELOPE_LP_ORDER = 2

GAMMA_ORDER = 4
# 1.019 makes the ERB of a 4th-order gamma envelope equal ERB_N.
GAMMA_BANDWIDTH = 1.019
DEFAULT_CHIRP = -1.0


@dataclass(frozen=True)
class ErbParams:
    c1: float = ERB_C1
    c2: float = ERB_C2


def erb_n(f, params: ErbParams = ErbParams()):
    """Equivalent rectangular bandwidth (Hz) of the auditory filter at `f` Hz."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    out = params.c1 * (params.c2 * f + 1.0)
    return float(out) if out.ndim == 0 else out


def erb_number(f):
    """ERB_N-number (Cam) of frequency `f` Hz."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    out = CAM_SCALE * np.log10(ERB_C2 * f + 1.0)
    return float(out) if out.ndim == 0 else out


def erb_number_inv(cam):
    cam = np.asarray(cam, dtype=float)
    out = (10.0 ** (cam / CAM_SCALE) - 1.0) / ERB_C2
    return float(out) if out.ndim == 0 else out


LevelHook = Callable[[np.ndarray, np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class FilterbankConfig:
    """Filterbank layout.

    `level_dependent` is the extension point for a compressive front end:
    when set, `level_hook(bands, center_freqs, sample_rate)` post-processes
    the linear channel outputs and must be supplied.
    """

    n_channels: int = 100
    f_min: float = 100.0
    f_max: float = 6000.0
    sample_rate: int = DEFAULT_SAMPLE_RATE
    level_dependent: bool = False
    chirp: float = DEFAULT_CHIRP
    level_hook: Optional[LevelHook] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n_channels < 2:
            raise ValueError("n_channels must be at least 2")
        if not 0 <= self.f_min < self.f_max:
            raise ValueError("need 0 <= f_min < f_max")
        if self.f_max >= self.sample_rate / 2:
            raise ValueError(
                f"f_max {self.f_max} Hz is at or above Nyquist for {self.sample_rate} Hz")
        if self.level_dependent and self.level_hook is None:
            raise ValueError("level_dependent=True requires a level_hook")


@dataclass(frozen=True)
class FilterbankOutput:
    bands: np.ndarray          # (channel, sample)
    center_freqs: np.ndarray
    sample_rate: int


@dataclass(frozen=True)
class EnvelopeSet:
    e_S: np.ndarray
    e_Shat: np.ndarray
    e_D: np.ndarray
    sample_rate: int


def center_frequencies(n_channels: int, f_min: float, f_max: float) -> np.ndarray:
    cams = np.linspace(erb_number(f_min), erb_number(f_max), n_channels)
    return erb_number_inv(cams)


def carrier_for_peak(f_peak, chirp: float, order: int = GAMMA_ORDER,
                     b: float = GAMMA_BANDWIDTH):
    """Carrier frequency that puts the gammachirp amplitude peak at `f_peak`.

    The peak sits at f_r + c*b*ERB_N(f_r)/n, which is linear in f_r.
    """
    s = chirp * b / order
    return (np.asarray(f_peak) - s * ERB_C1) / (1.0 + s * ERB_C1 * ERB_C2)


def gammachirp_ir(f_carrier: float, sample_rate: int, length: int, chirp: float,
                  order: int = GAMMA_ORDER, b: float = GAMMA_BANDWIDTH) -> np.ndarray:
    t = np.arange(1, length + 1) / sample_rate
    bw = b * erb_n(f_carrier)
    return (t ** (order - 1) * np.exp(-2 * np.pi * bw * t)
            * np.cos(2 * np.pi * f_carrier * t + chirp * np.log(t)))


def _ir_length(f_carrier: float, sample_rate: int, order: int, b: float,
               floor: float = 1e-5) -> int:
    rate = 2 * np.pi * b * erb_n(f_carrier)
    t_peak = (order - 1) / rate
    t = np.arange(1, int(sample_rate * 40 * t_peak) + 2) / sample_rate
    env = (t / t_peak) ** (order - 1) * np.exp(-rate * (t - t_peak))
    above = np.nonzero(env > floor)[0]
    return int(above[-1]) + 1


class Filterbank:
    """Linear gammachirp filterbank realized with FFT convolution."""

    def __init__(self, cfg: FilterbankConfig):
        self.cfg = cfg
        self.sample_rate = cfg.sample_rate
        self.center_freqs = center_frequencies(cfg.n_channels, cfg.f_min, cfg.f_max)
        self.carrier_freqs = carrier_for_peak(self.center_freqs, cfg.chirp)
        length = _ir_length(float(self.carrier_freqs[0]), cfg.sample_rate,
                            GAMMA_ORDER, GAMMA_BANDWIDTH)
        irs = np.empty((cfg.n_channels, length))
        n = np.arange(1, length + 1)
        for i, (fc, fr) in enumerate(zip(self.center_freqs, self.carrier_freqs)):
            g = gammachirp_ir(fr, cfg.sample_rate, length, cfg.chirp)
            gain = np.abs(np.sum(g * np.exp(-2j * np.pi * fc * n / cfg.sample_rate)))
            irs[i] = g / gain
        self.irs = irs
        self._spectra = {}

    @property
    def n_channels(self) -> int:
        return self.irs.shape[0]

    def frequency_response(self, freqs) -> np.ndarray:
        """Complex response of every channel at `freqs` Hz, shape (channel, freq)."""
        n = np.arange(1, self.irs.shape[1] + 1)
        kernel = np.exp(-2j * np.pi * np.outer(n, np.asarray(freqs, dtype=float))
                        / self.sample_rate)
        return self.irs @ kernel

    def filter(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = x.size
        nfft = next_fast_len(n + self.irs.shape[1] - 1, real=True)
        if nfft not in self._spectra:
            if len(self._spectra) > 8:
                self._spectra.clear()
            self._spectra[nfft] = rfft(self.irs, nfft, axis=-1)
        spec = rfft(x, nfft) * self._spectra[nfft]
        return irfft(spec, nfft, axis=-1)[:, :n]


def design_filterbank(cfg: FilterbankConfig = FilterbankConfig()) -> Filterbank:
    return Filterbank(cfg)


def analyze(fb: Filterbank, x: AudioSignal) -> FilterbankOutput:
    if x.sample_rate != fb.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: signal {x.sample_rate} Hz, filterbank {fb.sample_rate} Hz")
    bands = fb.filter(x.samples)
    if fb.cfg.level_dependent:
        bands = np.asarray(fb.cfg.level_hook(bands, fb.center_freqs, fb.sample_rate))
    return FilterbankOutput(bands, fb.center_freqs.copy(), fb.sample_rate)


def extract_envelope(band, sample_rate: int, cutoff: float = ENVELOPE_CUTOFF_HZ) -> np.ndarray:
    """Temporal envelope: analytic-signal magnitude, zero-phase lowpass, clamp at 0.

    Works on a single band or on a (channel, sample) matrix.
    """
    band = np.asarray(band, dtype=float)
    if band.shape[-1] == 0:
        raise ValueError("empty band signal")
    if cutoff >= sample_rate / 2:
        raise ValueError("envelope cutoff must be below Nyquist")
    n = band.shape[-1]
    # Zero-pad to a fast FFT length; prime-length transforms are very slow.
    mag = np.abs(sps.hilbert(band, N=next_fast_len(n), axis=-1)[..., :n])
    sos = sps.butter(ENVELOPE_LP_ORDER, cutoff, fs=sample_rate, output="sos")
    if band.shape[-1] > 3 * (2 * sos.shape[0] + 1):
        env = sps.sosfiltfilt(sos, mag, axis=-1)
    else:
        env = sps.sosfiltfilt(sos, mag, axis=-1, padlen=band.shape[-1] - 1)
    return np.maximum(env, 0.0)


def envelope_distortion(e_S, e_Shat, p: float = 2.0) -> np.ndarray:
    """Pointwise distortion between two power envelopes: |e_S^p - e_Shat^p|^(1/p)."""
    e_S = np.asarray(e_S, dtype=float)
    e_Shat = np.asarray(e_Shat, dtype=float)
    if e_S.shape != e_Shat.shape:
        raise ValueError(f"length mismatch: {e_S.shape} vs {e_Shat.shape}")
    if np.any(e_S < 0) or np.any(e_Shat < 0):
        raise ValueError("envelopes must be non-negative")
    # factor out the larger envelope so tiny values do not underflow to 0 when raised to p
    hi = np.maximum(e_S, e_Shat)
    lo = np.minimum(e_S, e_Shat)
    ratio = np.divide(lo, hi, out=np.ones_like(hi), where=hi > 0)
    return hi * (1.0 - ratio ** p) ** (1.0 / p)


def envelopes(fb: Filterbank, clean: AudioSignal, enhanced: AudioSignal,
              p: float = 2.0) -> EnvelopeSet:
    """Run both signals through the front end and form the distortion envelope."""
    e_S = extract_envelope(analyze(fb, clean).bands, fb.sample_rate)
    e_Shat = extract_envelope(analyze(fb, enhanced).bands, fb.sample_rate)
    return EnvelopeSet(e_S, e_Shat, envelope_distortion(e_S, e_Shat, p), fb.sample_rate)
