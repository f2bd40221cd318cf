"""GEDI and mr-GEDI speech intelligibility measures.

Predict the percent-correct intelligibility of enhanced speech from the
distortion between clean and enhanced temporal envelopes in a gammachirp
auditory filterbank, analysed through a modulation filterbank.

>>> from gedi import gedi, mr_gedi, load_wav
>>> result = gedi(load_wav("clean.wav"), load_wav("enhanced.wav"))  # doctest: +SKIP
>>> result.score, result.sdr_env                                     # doctest: +SKIP
"""
from .enhancement import (SpecSubConfig, WienerConfig, oracle_wiener, residual_noise_ss,
                          residual_noise_wf, spectral_subtract)
from .evaluation import (IntelligibilityCurve, LogisticParams, PsychometricFit,
                         SrtUndefinedError, confidence_interval, delta_srt, fit_logistic,
                         fit_observer, fit_psychometric, logistic_map, mean_difference,
                         rms_error, srt)
from .frontend import (FilterbankConfig, design_filterbank, erb_n, erb_number,
                       extract_envelope, envelope_distortion)
from .metric import (GediConfig, GediResult, ObserverParams, gedi, intelligibility, mr_gedi,
                     score, score_variants, weight_vector)
from .signal_io import (AudioSignal, MixSpec, generate_pink_noise, load_wav, mix_at_snr,
                        save_wav)

__version__ = "0.1.0"

__all__ = [
    "AudioSignal", "MixSpec", "load_wav", "save_wav", "mix_at_snr", "generate_pink_noise",
    "FilterbankConfig", "design_filterbank", "erb_n", "erb_number", "extract_envelope",
    "envelope_distortion", "GediConfig", "GediResult", "ObserverParams", "gedi", "mr_gedi",
    "score", "score_variants", "intelligibility", "weight_vector", "SpecSubConfig",
    "WienerConfig", "spectral_subtract", "oracle_wiener", "residual_noise_ss",
    "residual_noise_wf", "IntelligibilityCurve", "LogisticParams", "PsychometricFit",
    "SrtUndefinedError", "fit_observer", "fit_logistic", "fit_psychometric", "logistic_map",
    "srt", "delta_srt", "rms_error", "mean_difference", "confidence_interval",
]
