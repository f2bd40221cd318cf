"""Spectral subtraction and the oracle Wiener filter, seen through GEDI.

The same noisy word is enhanced three ways. The Wiener gain floor epsilon
trades residual noise for speech distortion, which the metric picks up.
"""
# %%
import numpy as np

from gedi import (GediConfig, MixSpec, SpecSubConfig, WienerConfig, generate_pink_noise,
                  mix_at_snr, oracle_wiener, score_variants, spectral_subtract)
from gedi.synth import synth_utterance

clean = synth_utterance(seed=11)
noise = generate_pink_noise(5.0, seed=2)
noisy, used = mix_at_snr(clean, noise, MixSpec(-3.0, 4))

# %% spectral subtraction; the noise estimate is the scaled excerpt itself
ss = spectral_subtract(noisy, used, SpecSubConfig(alpha=1.0, beta=0.01))
conditions = {"unprocessed": noisy, "ss": ss}

# %% the oracle Wiener filter knows clean speech and noise
for eps in (0.0, 0.1, 0.2):
    conditions[f"wiener eps={eps}"] = oracle_wiener(noisy, clean, used, WienerConfig(eps))

for name, sig in conditions.items():
    r = score_variants(clean, sig, GediConfig())
    out_snr = 10 * np.log10(np.sum(clean.samples ** 2)
                            / np.sum((sig.samples - clean.samples) ** 2))
    print(f"{name:16s} GEDI {r['gedi'].score:5.1f} %  mr-GEDI {r['mr_gedi'].score:5.1f} %"
          f"  waveform SNR {out_snr:+5.1f} dB")
