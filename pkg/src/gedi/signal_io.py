"""Audio containers, WAV I/O, level normalization and noise mixing.

Levels follow a fixed calibration convention: a full-scale sine
(amplitude 1.0, RMS 1/sqrt(2)) corresponds to 100 dB SPL. The default
presentation level of 65 dB therefore maps to an RMS of about 0.0126.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.io import wavfile

DEFAULT_SAMPLE_RATE = 16000
FULL_SCALE_SINE_DB = 100.0
DEFAULT_LEVEL_DB = 65.0

NOISE_KINDS = ("pink", "babble", "file")


class AudioFormatError(ValueError):
    """Raised for WAV files the pipeline refuses to read."""


class SampleRateMismatchError(AudioFormatError):
    pass


def level_to_rms(level_db: float) -> float:
    """RMS amplitude corresponding to `level_db` under the calibration convention."""
    return (1.0 / np.sqrt(2.0)) * 10.0 ** ((level_db - FULL_SCALE_SINE_DB) / 20.0)


def rms_to_level(value: float) -> float:
    if value <= 0:
        raise ValueError("level undefined for non-positive RMS")
    return FULL_SCALE_SINE_DB + 20.0 * np.log10(value * np.sqrt(2.0))


@dataclass(frozen=True)
class AudioSignal:
    """Mono signal with its sample rate.

    Parameters
    ----------
    samples : array_like
        Real-valued samples, nominally within [-1, 1].
    sample_rate : int
        Sampling frequency in Hz.
    nominal_level_db : float, optional
        Calibrated presentation level, if known.
    """

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE
    nominal_level_db: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1:
            raise ValueError("AudioSignal holds mono samples only")
        if x.size == 0:
            raise ValueError("empty signal")
        if not np.all(np.isfinite(x)):
            raise ValueError("signal contains NaN or Inf")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"invalid sample rate {self.sample_rate!r}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples, nominal_level_db=None) -> "AudioSignal":
        return AudioSignal(samples, self.sample_rate, nominal_level_db)


@dataclass(frozen=True)
class MixSpec:
    """How to build one noisy trial.

    `noise_start_seed` keys the random start point of the noise excerpt.
    """

    snr_db: float
    noise_start_seed: int = 0
    noise_kind: str = "pink"

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.noise_start_seed < 0:
            raise ValueError("noise_start_seed must be unsigned")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")


def load_wav(path, sample_rate: int = DEFAULT_SAMPLE_RATE) -> AudioSignal:
    """Read a mono integer-PCM WAV file, scaled to [-1, 1].

    No resampling is done: a file whose rate differs from `sample_rate`
    is rejected.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        fs, data = wavfile.read(path)
    except ValueError as exc:
        raise AudioFormatError(f"unsupported format: {path}: {exc}") from exc
    if data.ndim != 1:
        raise AudioFormatError(f"multichannel unsupported: {path} has {data.shape[1]} channels")
    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        x = data / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(float) - 128.0) / 128.0
    else:
        raise AudioFormatError(f"unsupported format: {path} has sample type {data.dtype}")
    if fs != sample_rate:
        raise SampleRateMismatchError(
            f"sample-rate mismatch: {path} is {fs} Hz, pipeline expects {sample_rate} Hz")
    return AudioSignal(x, fs)


def save_wav(path, signal: AudioSignal) -> int:
    """Write 16-bit PCM. Returns the number of clipped samples."""
    x = np.asarray(signal.samples)
    limit = 32767 / 32768
    clipped = int(np.count_nonzero(np.abs(x) > limit))
    pcm = np.round(np.clip(x, -1.0, limit) * 32768.0).astype(np.int16)
    wavfile.write(path, signal.sample_rate, pcm)
    return clipped


def rms(signal) -> float:
    x = signal.samples if isinstance(signal, AudioSignal) else np.asarray(signal, dtype=float)
    if x.size == 0:
        raise ValueError("rms of an empty signal")
    return float(np.sqrt(np.mean(np.square(x))))


def normalize_level(signal: AudioSignal, target_rms: float) -> AudioSignal:
    """Scale `signal` so that its RMS equals `target_rms`."""
    current = rms(signal)
    if current == 0:
        raise ValueError("cannot normalize a silent signal")
    if target_rms <= 0:
        raise ValueError("target_rms must be positive")
    return signal.with_samples(signal.samples * (target_rms / current),
                               nominal_level_db=rms_to_level(target_rms))


def noise_start_index(n_noise: int, n_speech: int, seed: int) -> int:
    """Seed-keyed uniform start index in [0, n_noise - n_speech]."""
    return int(np.random.default_rng(seed).integers(0, n_noise - n_speech, endpoint=True))


def mix_at_snr(speech: AudioSignal, noise: AudioSignal, spec: MixSpec):
    """Add a seeded noise excerpt to `speech` at `spec.snr_db`.

    Returns
    -------
    noisy, noise_used : AudioSignal
        The mixture and the scaled noise excerpt that was added.
    """
    if speech.sample_rate != noise.sample_rate:
        raise SampleRateMismatchError("sample-rate mismatch between speech and noise")
    n = len(speech)
    if len(noise) < n:
        raise ValueError("noise is shorter than speech")
    speech_rms = rms(speech)
    if speech_rms == 0:
        raise ValueError("silent speech")
    start = noise_start_index(len(noise), n, spec.noise_start_seed)
    excerpt = noise.samples[start:start + n]
    noise_rms = rms(excerpt)
    if noise_rms == 0:
        raise ValueError("silent noise excerpt")
    gain = speech_rms / (noise_rms * 10.0 ** (spec.snr_db / 20.0))
    scaled = excerpt * gain
    noisy = speech.with_samples(speech.samples + scaled)
    return noisy, speech.with_samples(scaled)


def generate_pink_noise(duration_s: float, sample_rate: int = DEFAULT_SAMPLE_RATE,
                        seed: int = 0, level_db: float = DEFAULT_LEVEL_DB,
                        f_low: float = 20.0) -> AudioSignal:
    """Pink (1/f power) noise by spectral shaping of seeded Gaussian noise.

    Components below `f_low` are removed so that sub-audio drift does not
    dominate the RMS. The result is scaled to `level_db`.
    """
    if not duration_s > 0:
        raise ValueError("duration_s must be positive")
    n = int(round(duration_s * sample_rate))
    if n < 2:
        raise ValueError("duration too short")
    white = np.random.default_rng(seed).standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    shape = np.zeros_like(freqs)
    keep = freqs >= f_low
    shape[keep] = 1.0 / np.sqrt(freqs[keep])
    pink = np.fft.irfft(spec * shape, n)
    pink *= level_to_rms(level_db) / rms(pink)
    return AudioSignal(pink, sample_rate, level_db)
