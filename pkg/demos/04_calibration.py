"""Calibrating the ideal-observer mapping and comparing SRTs.

Listening-test data are not bundled, so a "human" curve is simulated from
a known observer. Refitting recovers (k, sigma_S), and the SRT difference
between two curves is read from their psychometric fits.
"""
# %%
import numpy as np

from gedi import (IntelligibilityCurve, ObserverParams, delta_srt, fit_observer,
                  fit_psychometric, intelligibility, srt)

true = ObserverParams(k=1.3, sigma_s=1.2)
sdr = np.array([2.0, 4.0, 7.0, 10.0, 14.0, 20.0, 30.0])
human = intelligibility(sdr, true)
fitted = fit_observer(list(zip(sdr, human)))
print(f"true  k={true.k:.3f} sigma_S={true.sigma_s:.3f}")
print(f"fit   k={fitted.k:.3f} sigma_S={fitted.sigma_s:.3f}")

# %% SRT comparison: a model curve sitting 1.5 dB to the right of the listeners
snr = np.arange(-9.0, 7.0, 3.0)
listeners = IntelligibilityCurve.from_arrays(snr, 100 / (1 + np.exp(-(snr + 3.0))))
model = IntelligibilityCurve.from_arrays(snr, 100 / (1 + np.exp(-(snr + 1.5))))
h, m = fit_psychometric(listeners), fit_psychometric(model)
print(f"listener SRT {srt(h):.2f} dB, model SRT {srt(m):.2f} dB, "
      f"delta {delta_srt(srt(m), srt(h)):+.2f} dB (positive: model underestimates)")
