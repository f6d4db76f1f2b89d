import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flab import analysis as an
from flab.mesh import Field, make_mesh
from flab.nonlinearity import pure_power


def synthetic(t, y):
    return an.TimeSeries.from_columns(t=t, linf=y, max=y, min=-y, mean=np.zeros_like(t))


def test_lp_norms_of_constant():
    m = make_mesh(1, 2.0, None, 10)
    f = Field(m, np.full(10, -3.0))
    assert an.lp_norm(f, 1) == pytest.approx(6.0)
    assert an.lp_norm(f, 2) == pytest.approx(3.0 * math.sqrt(2.0))
    assert an.lp_norm(f, math.inf) == 3.0
    with pytest.raises(ValueError):
        an.lp_norm(f, 0)


def test_theta_oracle():
    assert an.theta(2, 6, 3) == 1.0
    assert an.theta(2, 2, 1) == 0.0
    with pytest.raises(ValueError):
        an.theta(2, 7, 3)  # between s and the critical exponent 6 on the wrong side


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("q0, m1", [(1.0, 3.0), (2.0, 1.5)])
def test_moser_closed_form_matches_recurrence(N, q0, m1):
    for k in range(31):
        rec = an.moser_p_recurrence(k, q0, N, m1)
        assert an.moser_p(k, q0, N, m1) == pytest.approx(rec, rel=1e-12)


def test_predicted_exponents():
    pred = an.predict_rates(1.0, 1, 3.0, 2.0)
    assert pred.short_exp == pytest.approx(1 / 3)
    assert pred.long_exp == pytest.approx(1 / 4)
    assert pred.zero_mean_long_exp == pytest.approx(0.5)
    assert pred.zero_mean_short_exp == pytest.approx(1.0)
    assert pred.nonzero_mean_rate is None


def test_predicted_nonzero_mean_rate():
    pred = an.predict_rates(1.0, 1, 2.0, 2.0, mean0=1.0, nl=pure_power(2.0), C_P=1 / math.pi)
    assert pred.nonzero_mean_rate == pytest.approx(2 * math.pi**2)


def test_predict_rates_rejects_small_q0():
    with pytest.raises(ValueError):
        an.predict_rates(0.5, 1, 2.0, 2.0)


@settings(max_examples=30, deadline=None)
@given(slope=st.floats(-3.0, -0.05), c=st.floats(0.1, 10.0))
def test_power_fit_recovers_exact_slope(slope, c):
    t = np.geomspace(1e-3, 10.0, 30)
    fit = an.fit_power_rate(synthetic(t, c * t**slope))
    assert fit.slope == pytest.approx(slope, abs=1e-10)
    assert fit.r2 == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(rate=st.floats(0.1, 30.0))
def test_exp_fit_recovers_exact_rate(rate):
    t = np.linspace(0.0, 1.0, 40)
    fit = an.fit_exp_rate(synthetic(t, 1e-3 * np.exp(-rate * t)))
    assert fit.rate == pytest.approx(rate, rel=1e-9)


def test_fit_needs_five_points():
    t = np.geomspace(1e-3, 1.0, 20)
    with pytest.raises(an.FitError):
        an.fit_power_rate(synthetic(t, t**-0.5), t_window=(0.5, 1.0))


def test_window_where_and_last_decade():
    t = np.geomspace(0.01, 100.0, 41)
    s = synthetic(t, 1.0 / t)
    lo, hi = an.window_where(s, "linf", 0.05, 0.5)
    assert 2.0 <= lo and hi <= 20.0
    assert an.last_decade(s) == (10.0, 100.0)
    with pytest.raises(an.FitError):
        an.window_where(s, "linf", 1e3, 1e4)


def test_detect_t_star_interpolates_in_log_time():
    t = np.array([0.1, 1.0, 10.0])
    s = synthetic(t, np.array([10.0, 2.0, 0.5]))
    # log y crosses zero at 1/2 of the way from log 1 to log 10 in log y space
    frac = math.log(2.0) / (math.log(2.0) - math.log(0.5))
    assert an.detect_t_star(s) == pytest.approx(10**frac)
    assert an.detect_t_star(synthetic(t, np.full(3, 0.5))) is None


def test_envelope_ratio_nan_at_zero():
    t = np.array([0.0, 0.1, 1.0])
    s = synthetic(t, np.ones(3))
    r = an.envelope_ratio(s, an.predict_rates(1.0, 1, 3.0, 2.0), 1.0)
    assert math.isnan(r[0])
    assert np.all(r[1:] > 0)


def test_timeseries_rejects_unordered_times():
    with pytest.raises(ValueError):
        synthetic(np.array([0.0, 1.0, 1.0]), np.ones(3)).check()


def test_deviation_from_level():
    s = an.TimeSeries.from_columns(t=[0.0, 1.0], max=[1.2, 1.01], min=[0.9, 0.995], mean=[1.0, 1.0])
    np.testing.assert_allclose(s.deviation_inf(1.0), [0.2, 0.01])
    np.testing.assert_allclose(s["dev_inf"], [0.2, 0.01])


def test_poincare_box_and_numeric_2d():
    m = make_mesh(2, (2.0, 1.0), None, (128, 64))
    assert an.poincare_constant_box((2.0, 1.0)) == pytest.approx(2 / math.pi)
    assert an.poincare_constant_numeric(m) == pytest.approx(2 / math.pi, rel=1e-3)


def test_poincare_numeric_matches_discrete_eigenvalue():
    # exact first nonzero eigenvalue of the three-point Neumann matrix
    n, L = 32, 1.0
    m = make_mesh(1, L, None, n)
    h = L / n
    exact = 4.0 / h**2 * math.sin(math.pi * h / (2 * L)) ** 2
    assert an.smallest_neumann_eigenvalue(m) == pytest.approx(exact, rel=1e-9)
