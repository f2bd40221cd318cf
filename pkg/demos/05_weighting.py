"""What the ERB channel weighting does.

Low channels have narrow auditory filters and get weights above one; high
channels get weights below one. Turning the weighting off changes each
band's SDR and therefore the score.
"""
# %%
import numpy as np

from gedi import (GediConfig, MixSpec, design_filterbank, FilterbankConfig, gedi,
                  generate_pink_noise, mix_at_snr, weight_vector)
from gedi.synth import synth_utterance

cf = design_filterbank(FilterbankConfig()).center_freqs
w = weight_vector(cf)
for f in (100, 500, 1000, 3000, 6000):
    i = int(np.argmin(np.abs(cf - f)))
    print(f"channel {i:3d} at {cf[i]:7.1f} Hz  weight {w[i]:.3f}")

# %%
clean = synth_utterance(seed=5)
noisy, _ = mix_at_snr(clean, generate_pink_noise(5.0, seed=1), MixSpec(0.0, 2))
weighted = gedi(clean, noisy, GediConfig(weighting_enabled=True))
plain = gedi(clean, noisy, GediConfig(weighting_enabled=False))
print("weighted   ", np.round(weighted.sdr_bands, 2), f"score {weighted.score:.1f} %")
print("unweighted ", np.round(plain.sdr_bands, 2), f"score {plain.score:.1f} %")
