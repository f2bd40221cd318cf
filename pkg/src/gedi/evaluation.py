"""Calibration and curve analysis.

Fitting the ideal-observer and logistic back ends, cumulative-Gaussian
psychometric fits with SRT/ΔSRT, RMS error and bias between curves, and a
Student-t confidence interval for sample-size comparisons.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from .metric import MU_N, SIGMA_N, ObserverParams, intelligibility

# The psychometric mean may wander this far outside the tested SNR range
# before the fit is declared to have no 50% crossing.
SRT_EXTRAPOLATION_DB = 24.0
_TOL = 1e-8


class SrtUndefinedError(ValueError):
    """The fitted curve does not cross 50% within the extrapolation window."""


class DegenerateDataError(ValueError):
    """The data cannot determine the requested parameters."""


@dataclass(frozen=True)
class IntelligibilityCurve:
    points: Tuple[Tuple[float, float], ...]
    label: str = ""

    def __post_init__(self):
        pts = tuple((float(s), float(p)) for s, p in self.points)
        object.__setattr__(self, "points", tuple(sorted(pts)))
        snrs = [s for s, _ in pts]
        if len(set(snrs)) != len(snrs):
            raise ValueError("SNRs must be distinct")
        if any(not 0 <= p <= 100 for _, p in pts):
            raise ValueError("percent correct must lie in [0, 100]")

    @classmethod
    def from_arrays(cls, snr_db, percent, label: str = "") -> "IntelligibilityCurve":
        return cls(tuple(zip(np.asarray(snr_db, float), np.asarray(percent, float))), label)

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([s for s, _ in self.points])

    @property
    def percent(self) -> np.ndarray:
        return np.array([p for _, p in self.points])


@dataclass(frozen=True)
class PsychometricFit:
    """Cumulative-Gaussian fit percent = 100 * Phi((snr - mu) / sd).

    `srt_defined` is False when the scores never straddle 50% or the mean
    ran into the extrapolation bound; `srt()` then raises.
    """

    mu: float
    sd: float
    residual: float
    srt_defined: bool = True
    label: str = ""

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("sd must be positive")

    def __call__(self, snr_db):
        return 100.0 * stats.norm.cdf((np.asarray(snr_db, float) - self.mu) / self.sd)


@dataclass(frozen=True)
class LogisticParams:
    """Logistic back end. Set `a`, `b` for the STOI/ESTOI form or
    `B`, `C`, `A_high` for the HASPI form."""

    a: Optional[float] = None
    b: Optional[float] = None
    B: Optional[float] = None
    C: Optional[float] = None
    A_high: Optional[float] = None
    form: str = field(init=False)

    def __post_init__(self):
        stoi = self.a is not None and self.b is not None
        haspi = None not in (self.B, self.C, self.A_high)
        if stoi == haspi:
            raise ValueError("give either (a, b) or (B, C, A_high)")
        vals = (self.a, self.b) if stoi else (self.B, self.C, self.A_high)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("logistic parameters must be finite")
        object.__setattr__(self, "form", "stoi" if stoi else "haspi")


LOGISTIC_PRESETS = {
    ("stoi", "pink"): LogisticParams(a=-6.44, b=4.56),
    ("stoi", "babble"): LogisticParams(a=-8.91, b=5.84),
    ("estoi", "pink"): LogisticParams(a=-6.16, b=3.39),
    ("estoi", "babble"): LogisticParams(a=-9.90, b=4.88),
    ("haspi", "pink"): LogisticParams(B=-10.88, C=4.04, A_high=13.32),
    ("haspi", "babble"): LogisticParams(B=-61.36, C=-22.15, A_high=93.87),
}


def _expit_percent(z):
    # 100 / (1 + exp(z)) without overflow
    return 100.0 * stats.logistic.sf(z)


def logistic_map(d, params: LogisticParams):
    """Map an objective index to percent correct.

    STOI form: 100 / (1 + exp(a*d + b)). HASPI form: d is a pair
    (c, a_high) and the result is 100 / (1 + exp(-(B + C*c + A_high*a_high))).
    """
    if params.form == "stoi":
        out = _expit_percent(params.a * np.asarray(d, float) + params.b)
    else:
        c, a_high = np.asarray(d, float)[..., 0], np.asarray(d, float)[..., 1]
        out = _expit_percent(-(params.B + params.C * c + params.A_high * a_high))
    return float(out) if np.ndim(out) == 0 else out


def _nelder_mead(fun, x0, bounds):
    res = optimize.minimize(fun, x0, method="Nelder-Mead", bounds=bounds,
                            options={"xatol": 1e-10, "fatol": _TOL, "maxiter": 20000,
                                     "maxfev": 40000})
    return res.x


def fit_observer(points: Sequence[Tuple[float, float]], m: float = 20000,
                 mu_n: float = MU_N, sigma_n: float = SIGMA_N) -> ObserverParams:
    """Least-squares (k, sigma_S) from (SDR_env, target percent) pairs.

    Starts from (1, 1) with a bounded Nelder-Mead search, so results are
    reproducible.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DegenerateDataError("need at least 3 (sdr, percent) points")
    sdr, target = pts[:, 0], pts[:, 1]
    if np.ptp(target) == 0:
        raise DegenerateDataError("all targets are equal")
    if np.any(sdr < 0):
        raise ValueError("SDR_env must be non-negative")
    if not np.any((target > 0) & (target < 100)):
        raise DegenerateDataError("no target strictly between 0 and 100")

    def loss(x):
        obs = ObserverParams(k=x[0], sigma_s=x[1], m=m, mu_n=mu_n, sigma_n=sigma_n)
        return float(np.sum((intelligibility(sdr, obs) - target) ** 2))

    k, s = _nelder_mead(loss, [1.0, 1.0], [(1e-4, 50.0), (0.0, 50.0)])
    return ObserverParams(k=float(k), sigma_s=float(s), m=m, mu_n=mu_n, sigma_n=sigma_n)


def fit_logistic(pairs, form: str = "stoi") -> LogisticParams:
    """Least-squares logistic parameters.

    For the STOI form `pairs` holds (d, percent); for the HASPI form it
    holds ((c, a_high), percent) or flat (c, a_high, percent) rows.
    """
    if form not in ("stoi", "haspi"):
        raise ValueError(f"unknown form {form!r}")
    rows = [(np.atleast_1d(np.asarray(d, float)), float(p)) for d, p in
            ((r[:-1] if len(r) > 2 else r[0], r[-1]) for r in pairs)]
    x = np.array([r[0] for r in rows])
    y = np.array([r[1] for r in rows])
    if np.any((y <= 0) | (y >= 100)):
        raise DegenerateDataError("targets must lie strictly between 0 and 100")
    z = np.log(100.0 / y - 1.0)          # a*d + b for the STOI form
    if form == "stoi":
        d = x[:, 0]
        if np.unique(d).size < 2:
            raise DegenerateDataError("need at least two distinct d values")
        design = np.column_stack([d, np.ones_like(d)])
        x0 = [-5.0, 5.0]
    else:
        if x.shape[1] != 2:
            raise ValueError("HASPI form needs (c, a_high) features")
        design = np.column_stack([-np.ones(len(x)), -x[:, 0], -x[:, 1]])
        x0 = [0.0, 0.0, 0.0]
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DegenerateDataError("data cannot determine all logistic parameters")

    def loss(theta):
        return float(np.sum((_expit_percent(design @ theta) - y) ** 2))

    # The linearized solve is exact for noise-free data; the percent-domain
    # refinement from the fixed start handles noisy targets.
    lin = np.linalg.lstsq(design, z, rcond=None)[0]
    theta = optimize.minimize(loss, lin, method="Nelder-Mead",
                              options={"xatol": 1e-10, "fatol": _TOL, "maxiter": 20000}).x
    if loss(np.asarray(x0)) < loss(theta):
        theta = np.asarray(x0, float)
    if form == "stoi":
        return LogisticParams(a=float(theta[0]), b=float(theta[1]))
    return LogisticParams(B=float(theta[0]), C=float(theta[1]), A_high=float(theta[2]))


def fit_psychometric(curve: IntelligibilityCurve) -> PsychometricFit:
    """Cumulative-Gaussian least-squares fit, unweighted."""
    snr, pc = curve.snr_db, curve.percent
    if snr.size < 3:
        raise DegenerateDataError("need at least 3 points")
    lo, hi = snr.min() - SRT_EXTRAPOLATION_DB, snr.max() + SRT_EXTRAPOLATION_DB
    straddles = pc.min() < 50.0 < pc.max() or np.any(pc == 50.0)

    above = pc >= 50.0
    if straddles and np.any(above) and not np.all(above):
        i = int(np.argmax(above))
        if i > 0 and pc[i] != pc[i - 1]:
            mu0 = snr[i - 1] + (50.0 - pc[i - 1]) * (snr[i] - snr[i - 1]) / (pc[i] - pc[i - 1])
        else:
            mu0 = snr[i]
    else:
        mu0 = float(np.mean(snr))
    sd0 = max(np.ptp(snr) / 4.0, 0.5)

    def resid(x):
        return 100.0 * stats.norm.cdf((snr - x[0]) / x[1]) - pc

    res = optimize.least_squares(resid, [mu0, sd0], bounds=([lo, 1e-3], [hi, 200.0]),
                                 xtol=1e-12, ftol=1e-12, gtol=1e-12, method="trf")
    mu, sd = map(float, res.x)
    at_bound = np.isclose(mu, lo, atol=1e-6) or np.isclose(mu, hi, atol=1e-6)
    rms = float(np.sqrt(np.mean(res.fun ** 2)))
    return PsychometricFit(mu, sd, rms, bool(straddles and not at_bound), curve.label)


def srt(fit: PsychometricFit) -> float:
    """SNR (dB) where the fitted curve crosses 50%."""
    if not fit.srt_defined:
        raise SrtUndefinedError(f"SRT undefined for {fit.label or 'curve'}")
    return fit.mu


def delta_srt(oim_srt: float, human_srt: float) -> float:
    """SRT_OIM - SRT_human. Positive means the measure underestimates."""
    if not (np.isfinite(oim_srt) and np.isfinite(human_srt)):
        raise SrtUndefinedError("SRT undefined")
    return float(oim_srt - human_srt)


def _matched(a, b) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(a, IntelligibilityCurve) and isinstance(b, IntelligibilityCurve):
        if not np.array_equal(a.snr_db, b.snr_db):
            raise ValueError("SNR grid mismatch")
        return a.percent, b.percent
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.shape != b.shape:
        raise ValueError("SNR grid mismatch")
    return a, b


def rms_error(a, b) -> float:
    """Root-mean-square difference between two curves on the same SNR grid."""
    x, y = _matched(a, b)
    return float(np.sqrt(np.mean((x - y) ** 2)))


def mean_difference(processed, unprocessed) -> float:
    """Mean of processed minus unprocessed. Positive means improvement."""
    x, y = _matched(processed, unprocessed)
    return float(np.mean(x - y))


def confidence_interval(mean: float, sd: float, n: int, alpha: float = 0.05):
    """Two-sided Student-t interval mean ± t_{alpha/2}(n-1) * sd / sqrt(n)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if sd < 0:
        raise ValueError("sd must be non-negative")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    half = stats.t.ppf(1.0 - alpha / 2.0, n - 1) * sd / np.sqrt(n)
    return float(mean - half), float(mean + half)
