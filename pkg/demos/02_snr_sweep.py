"""Predicted intelligibility against SNR for unprocessed noisy speech.

Scores are averaged over a handful of words and noise seeds, then a
cumulative-normal psychometric curve is fitted to locate the 50 % point.
"""
# %%
import numpy as np

from gedi import (GediConfig, IntelligibilityCurve, MixSpec, fit_psychometric,
                  generate_pink_noise, mix_at_snr, score_variants)
from gedi.synth import synth_corpus

words = synth_corpus(5, seed=0)
noise = generate_pink_noise(10.0, seed=1)
snrs = [-9.0, -6.0, -3.0, 0.0, 3.0, 6.0]
seeds = range(3)

# %%
scores = {"gedi": [], "mr_gedi": []}
for snr in snrs:
    per = {"gedi": [], "mr_gedi": []}
    for i, w in enumerate(words):
        for s in seeds:
            noisy, _ = mix_at_snr(w, noise, MixSpec(snr, 100 * i + s))
            for v, r in score_variants(w, noisy, GediConfig()).items():
                per[v].append(r.score)
    for v in scores:
        scores[v].append(np.mean(per[v]))
    print(f"{snr:+5.1f} dB  GEDI {scores['gedi'][-1]:5.1f} %  mr-GEDI {scores['mr_gedi'][-1]:5.1f} %")

# %% fit and read off the SRT
for v, pc in scores.items():
    fit = fit_psychometric(IntelligibilityCurve.from_arrays(snrs, pc, v))
    srt = f"{fit.mu:.2f} dB" if fit.srt_defined else "undefined"
    print(f"{v:8s} SRT {srt}, slope sd {fit.sd:.2f} dB, fit rms {fit.residual:.2f} %")
