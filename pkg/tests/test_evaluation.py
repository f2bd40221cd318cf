import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from gedi.evaluation import (LOGISTIC_PRESETS, DegenerateDataError, IntelligibilityCurve,
                             LogisticParams, PsychometricFit, SrtUndefinedError,
                             confidence_interval, delta_srt, fit_logistic, fit_observer,
                             fit_psychometric, logistic_map, mean_difference, rms_error, srt)
from gedi.metric import ObserverParams, intelligibility


def phi(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def t_quantile(alpha, dof):
    """Two-sided Student-t critical value from the incomplete-beta inverse."""
    x = special.betaincinv(dof / 2.0, 0.5, alpha)
    return math.sqrt(dof * (1.0 / x - 1.0))


def curve(snr, pc, label=""):
    return IntelligibilityCurve.from_arrays(snr, pc, label)


# ---- curve type ---------------------------------------------------------------------

def test_curve_validation():
    with pytest.raises(ValueError):
        curve([0, 0], [10, 20])
    with pytest.raises(ValueError):
        curve([0, 1], [10, 120])
    c = curve([3, -3, 0], [60, 20, 40])
    np.testing.assert_array_equal(c.snr_db, [-3, 0, 3])
    np.testing.assert_array_equal(c.percent, [20, 40, 60])


# ---- observer fit -------------------------------------------------------------------

def test_fit_observer_recovers_parameters():
    sdr = np.array([1.0, 3.0, 6.0, 10.0, 15.0, 25.0])
    target = intelligibility(sdr, ObserverParams(1.4, 1.0))
    p = fit_observer(list(zip(sdr, target)))
    assert p.k == pytest.approx(1.4, abs=0.02)
    assert p.sigma_s == pytest.approx(1.0, abs=0.02)


def test_fit_observer_table_round_trip():
    sdr = np.array([2.0, 5.0, 8.0, 12.0, 20.0, 35.0])
    target = intelligibility(sdr, ObserverParams(1.23, 1.83))
    p = fit_observer(list(zip(sdr, target)))
    assert p.k == pytest.approx(1.23, abs=0.02)
    assert p.sigma_s == pytest.approx(1.83, abs=0.02)


def test_fit_observer_degenerate():
    with pytest.raises(DegenerateDataError):
        fit_observer([(5.0, 40.0)])
    with pytest.raises(DegenerateDataError):
        fit_observer([(1.0, 50.0), (2.0, 50.0), (3.0, 50.0)])


# ---- logistic mappings -----------------------------------------------------------------

def test_logistic_examples():
    assert logistic_map(1.0, LogisticParams(a=-2.0, b=2.0)) == pytest.approx(50.0)
    stoi = LOGISTIC_PRESETS[("stoi", "pink")]
    z = -6.44 * 0.708 + 4.56
    assert logistic_map(0.708, stoi) == pytest.approx(100 / (1 + math.exp(z)), rel=1e-12)
    assert logistic_map(0.708, stoi) == pytest.approx(50.0, abs=0.1)
    haspi = LOGISTIC_PRESETS[("haspi", "pink")]
    p = -10.88 + 4.04 + 13.32
    assert p == pytest.approx(6.48)
    assert logistic_map([1.0, 1.0], haspi) == pytest.approx(100 / (1 + math.exp(-p)),
                                                           rel=1e-12)
    assert logistic_map([1.0, 1.0], haspi) == pytest.approx(99.85, abs=0.01)


def test_logistic_params_validation():
    with pytest.raises(ValueError):
        LogisticParams(a=1.0)
    with pytest.raises(ValueError):
        LogisticParams(a=1.0, b=2.0, B=1.0, C=1.0, A_high=1.0)
    with pytest.raises(ValueError):
        LogisticParams(a=float("nan"), b=1.0)


@settings(max_examples=100)
@given(st.floats(-50, 50), st.floats(0.01, 5), st.floats(-20, -0.1), st.floats(-10, 10))
def test_logistic_bounds_and_monotone(d, dd, a, b):
    prm = LogisticParams(a=a, b=b)
    lo, hi = logistic_map(d, prm), logistic_map(d + dd, prm)
    assert 0 <= lo <= hi <= 100


def test_fit_logistic_recovers_babble_stoi():
    prm = LogisticParams(a=-8.91, b=5.84)
    d = np.linspace(0.3, 1.0, 8)
    fit = fit_logistic(list(zip(d, logistic_map(d, prm))))
    assert fit.a == pytest.approx(-8.91, abs=0.05)
    assert fit.b == pytest.approx(5.84, abs=0.05)


def test_fit_logistic_two_points_exact():
    prm = LogisticParams(a=-6.16, b=3.39)
    fit = fit_logistic([(0.4, logistic_map(0.4, prm)), (0.8, logistic_map(0.8, prm))])
    assert fit.a == pytest.approx(-6.16, abs=1e-6)
    assert fit.b == pytest.approx(3.39, abs=1e-6)


def test_fit_logistic_haspi():
    prm = LOGISTIC_PRESETS[("haspi", "pink")]
    rng = np.random.default_rng(0)
    feats = rng.uniform(0, 1, (8, 2))
    fit = fit_logistic([(f, logistic_map(f, prm)) for f in feats], form="haspi")
    assert (fit.B, fit.C, fit.A_high) == pytest.approx((-10.88, 4.04, 13.32), abs=0.05)


def test_fit_logistic_degenerate():
    with pytest.raises(DegenerateDataError):
        fit_logistic([(0.5, 50.0), (0.5, 50.0)])
    with pytest.raises(DegenerateDataError):
        fit_logistic([((0.1, 0.1), 40.0), ((0.2, 0.2), 50.0), ((0.3, 0.3), 60.0)], "haspi")


# ---- psychometric fits and SRT ---------------------------------------------------------

def test_psychometric_recovers_parameters():
    snr = np.array([-9.0, -6.0, -3.0, 0.0, 3.0])
    pc = [100 * phi((s + 3.0) / 2.0) for s in snr]
    fit = fit_psychometric(curve(snr, pc))
    assert fit.mu == pytest.approx(-3.0, abs=0.05)
    assert fit.sd == pytest.approx(2.0, abs=0.05)
    assert fit(srt(fit)) == pytest.approx(50.0, abs=1e-6)


def test_psychometric_symmetric_data():
    fit = fit_psychometric(curve([-6, -4, -3, -2, 0], [10, 30, 50, 70, 90]))
    assert fit.mu == pytest.approx(-3.0, abs=1e-6)


def test_srt_undefined():
    fit = fit_psychometric(curve([-6, -3, 0, 3], [91, 94, 97, 99]))
    assert not fit.srt_defined
    with pytest.raises(SrtUndefinedError):
        srt(fit)
    with pytest.raises(ValueError):
        PsychometricFit(0.0, 0.0, 0.0)
    with pytest.raises(DegenerateDataError):
        fit_psychometric(curve([0, 3], [20, 80]))


@settings(max_examples=30, deadline=None)
@given(st.floats(-8, 4), st.floats(0.8, 6))
def test_psychometric_refit_closure(mu, sd):
    snr = np.arange(-12.0, 9.0, 3.0)
    pc = [100 * phi((s - mu) / sd) for s in snr]
    fit = fit_psychometric(curve(snr, pc))
    assert fit.srt_defined
    assert fit.mu == pytest.approx(mu, abs=0.05)
    assert fit.sd == pytest.approx(sd, abs=0.05)
    assert fit(fit.mu) == pytest.approx(50.0, abs=1e-6)


def test_delta_srt_examples():
    assert delta_srt(-3.0, -3.0) == 0.0
    assert delta_srt(-6.0, -4.0) == pytest.approx(-2.0)
    snr = np.arange(-9.0, 7.0, 3.0)
    human = fit_psychometric(curve(snr, [100 * phi((s + 4) / 2.5) for s in snr]))
    shifted = fit_psychometric(curve(snr, [100 * phi((s + 2) / 2.5) for s in snr]))
    assert delta_srt(srt(shifted), srt(human)) == pytest.approx(2.0, abs=1e-3)


# ---- curve comparisons -----------------------------------------------------------------

def test_rms_and_mean_difference():
    a = curve([-6, -3, 0], [20, 40, 60])
    assert rms_error(a, a) == 0.0 and mean_difference(a, a) == 0.0
    b = curve([-6, -3, 0], [10, 30, 50])
    assert rms_error(a, b) == pytest.approx(10.0)
    assert mean_difference(b, a) == pytest.approx(-10.0)
    c = curve([-6, -3, 0], [30, 30, 60])
    assert rms_error(a, c) == pytest.approx(math.sqrt(200 / 3))
    assert rms_error(a, c) == pytest.approx(8.165, abs=1e-3)
    with pytest.raises(ValueError, match="grid"):
        rms_error(a, curve([-6, -3, 3], [1, 2, 3]))


# ---- confidence interval ---------------------------------------------------------------

def test_ci_examples():
    lo, hi = confidence_interval(10.0, 3.0, 9, 0.05)
    assert (hi - lo) / 2 == pytest.approx(t_quantile(0.05, 8), rel=1e-8)
    assert (hi - lo) / 2 == pytest.approx(2.306, abs=1e-3)
    assert confidence_interval(5.0, 0.0, 4) == (5.0, 5.0)
    r9 = np.diff(confidence_interval(0, 1, 9))[0]
    r14 = np.diff(confidence_interval(0, 1, 14))[0]
    assert r9 / r14 == pytest.approx(math.sqrt(14 / 9) * t_quantile(0.05, 8)
                                     / t_quantile(0.05, 13), rel=1e-8)
    assert r9 / r14 == pytest.approx(1.33, abs=5e-3)
    with pytest.raises(ValueError):
        confidence_interval(0, 1, 1)


@settings(max_examples=50)
@given(st.integers(2, 200), st.floats(0.01, 10), st.floats(0.001, 0.5))
def test_ci_shrinks_with_n(n, sd, alpha):
    a = np.diff(confidence_interval(0, sd, n, alpha))[0]
    b = np.diff(confidence_interval(0, sd, n + 1, alpha))[0]
    assert b < a
