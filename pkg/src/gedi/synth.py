"""Deterministic speech-like test material.

A small source-filter synthesizer producing short CV-syllable "words":
glottal pulse trains through formant resonators for vowels and nasals,
band-limited noise for fricatives, silence plus burst for plosives. The
output has the syllabic envelope modulation (roughly 4-8 Hz) and the
spectral layout that intelligibility measures respond to, which makes it
usable when no recorded corpus is at hand.
"""
from __future__ import annotations

import os

import numpy as np
from scipy import signal as sps

from .signal_io import AudioSignal, DEFAULT_LEVEL_DB, DEFAULT_SAMPLE_RATE, level_to_rms, save_wav

# (F1, F2, F3) in Hz
VOWELS = {
    "a": (800.0, 1200.0, 2500.0),
    "i": (300.0, 2300.0, 3000.0),
    "u": (350.0, 1300.0, 2400.0),
    "e": (450.0, 1900.0, 2600.0),
    "o": (500.0, 900.0, 2400.0),
}
FORMANT_BW = (80.0, 100.0, 150.0)
FRICATIVE_BANDS = {"s": (3500.0, 7000.0), "sh": (2000.0, 5000.0), "h": (800.0, 4000.0)}


def _resonator(x, freq, bw, fs):
    r = np.exp(-np.pi * bw / fs)
    theta = 2 * np.pi * freq / fs
    a = [1.0, -2 * r * np.cos(theta), r * r]
    return sps.lfilter([1.0 - r], a, x)


def _ramp(n, fs, edge_s=0.012):
    w = np.ones(n)
    m = min(int(edge_s * fs), n // 2)
    if m:
        rise = 0.5 - 0.5 * np.cos(np.pi * np.arange(m) / m)
        w[:m] = rise
        w[n - m:] = rise[::-1]
    return w


def _glottal(n, f0_start, f0_end, fs, rng):
    f0 = np.linspace(f0_start, f0_end, n) * (1 + 0.01 * rng.standard_normal(n).cumsum() / np.sqrt(n))
    phase = np.cumsum(f0 / fs)
    pulses = np.diff(np.floor(phase), prepend=0.0)
    # Glottal flow tilt: two real poles.
    src = sps.lfilter([1.0], [1.0, -0.97], pulses)
    src = sps.lfilter([1.0], [1.0, -0.9], src)
    src = np.diff(src, prepend=0.0)
    return src + 0.02 * rng.standard_normal(n) * np.abs(src).max()


def _vowel(n, formants, f0a, f0b, fs, rng):
    x = _glottal(n, f0a, f0b, fs, rng)
    y = np.zeros(n)
    for f, bw, g in zip(formants, FORMANT_BW, (1.0, 0.6, 0.3)):
        y += g * _resonator(x, f, bw, fs)
    return y


def synth_utterance(seed: int, sample_rate: int = DEFAULT_SAMPLE_RATE,
                    level_db: float = DEFAULT_LEVEL_DB) -> AudioSignal:
    """One speech-like word of three to five syllables, about 0.5-1 s long."""
    rng = np.random.default_rng([seed, 7331])
    fs = sample_rate
    n_syl = int(rng.integers(3, 6))
    f0 = rng.uniform(100.0, 150.0)
    pieces = [np.zeros(int(0.04 * fs))]
    for k in range(n_syl):
        f0a = f0 * (1.0 - 0.25 * k / n_syl)
        f0b = f0 * (1.0 - 0.25 * (k + 1) / n_syl)
        kind = rng.choice(["plosive", "fricative", "nasal", "none"], p=[0.35, 0.3, 0.2, 0.15])
        if kind == "plosive":
            pieces.append(np.zeros(int(rng.uniform(0.03, 0.05) * fs)))
            nb = int(0.012 * fs)
            burst = rng.standard_normal(nb) * _ramp(nb, fs, 0.002)
            lo = rng.uniform(500.0, 2500.0)
            sos = sps.butter(2, [lo, min(lo * 3.0, 0.45 * fs)], "bandpass", fs=fs, output="sos")
            pieces.append(0.4 * sps.sosfilt(sos, burst))
        elif kind == "fricative":
            nf = int(rng.uniform(0.05, 0.09) * fs)
            band = FRICATIVE_BANDS[rng.choice(list(FRICATIVE_BANDS))]
            sos = sps.butter(4, band, "bandpass", fs=fs, output="sos")
            pieces.append(0.25 * sps.sosfilt(sos, rng.standard_normal(nf)) * _ramp(nf, fs, 0.015))
        elif kind == "nasal":
            nn = int(rng.uniform(0.04, 0.07) * fs)
            x = _glottal(nn, f0a, f0a, fs, rng)
            pieces.append(0.5 * _resonator(x, 250.0, 60.0, fs) * _ramp(nn, fs))
        nv = int(rng.uniform(0.08, 0.16) * fs)
        vowel = VOWELS[rng.choice(list(VOWELS))]
        formants = tuple(f * rng.uniform(0.93, 1.07) for f in vowel)
        pieces.append(_vowel(nv, formants, f0a, f0b, fs, rng) * _ramp(nv, fs, 0.02))
    pieces.append(np.zeros(int(0.04 * fs)))
    x = np.concatenate(pieces)
    x *= level_to_rms(level_db) / np.sqrt(np.mean(x ** 2))
    return AudioSignal(x, fs, level_db)


def synth_corpus(n: int, seed: int = 0, sample_rate: int = DEFAULT_SAMPLE_RATE):
    return [synth_utterance(seed * 100003 + i, sample_rate) for i in range(n)]


def write_corpus(directory, n: int, seed: int = 0,
                 sample_rate: int = DEFAULT_SAMPLE_RATE) -> list:
    """Write `n` synthetic words as word_000.wav, word_001.wav, ... into `directory`."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, sig in enumerate(synth_corpus(n, seed, sample_rate)):
        path = os.path.join(directory, f"word_{i:03d}.wav")
        save_wav(path, sig)
        paths.append(path)
    return paths


def synth_babble(duration_s: float, n_talkers: int = 8, seed: int = 0,
                 sample_rate: int = DEFAULT_SAMPLE_RATE,
                 level_db: float = DEFAULT_LEVEL_DB) -> AudioSignal:
    """Multi-talker babble: `n_talkers` streams of synthetic words summed.

    Each stream strings words together with short random pauses and starts
    at a random offset, so syllable rhythms do not line up across talkers.
    """
    rng = np.random.default_rng([seed, 4242])
    n = int(round(duration_s * sample_rate))
    if n <= 0:
        raise ValueError("duration must be positive")
    mix = np.zeros(n)
    word_seed = int(rng.integers(1 << 30))
    for _ in range(n_talkers):
        offset = int(rng.integers(0, sample_rate))
        stream, total = [], 0
        while total < n + offset:
            w = synth_utterance(word_seed, sample_rate, level_db).samples
            word_seed += 1
            gap = np.zeros(int(rng.uniform(0.02, 0.15) * sample_rate))
            stream += [w, gap]
            total += w.size + gap.size
        mix += np.concatenate(stream)[offset:offset + n]
    mix *= level_to_rms(level_db) / np.sqrt(np.mean(mix ** 2))
    return AudioSignal(mix, sample_rate, level_db)
