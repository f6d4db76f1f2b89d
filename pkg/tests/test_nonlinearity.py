import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from flab.nonlinearity import (
    ConstructionError,
    Kind,
    build_two_power,
    pure_power,
    verify_growth_conditions,
)

exponents = st.floats(min_value=1.1, max_value=4.0)
args = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


def test_pure_power_values():
    nl = pure_power(2.0)
    assert nl.kind is Kind.PURE_POWER
    assert nl.phi(2.0) == 4.0
    assert nl.phi(-2.0) == -4.0
    assert nl.phi_prime(-3.0) == 6.0
    assert nl.psi(3.0) == pytest.approx(9.0)  # |u|^3 / 3
    assert nl.m == 2.0


def test_scalar_in_scalar_out_and_shapes():
    nl = build_two_power(3.0, 2.0)
    assert isinstance(nl.phi(0.3), float)
    assert nl.phi(np.zeros((2, 3))).shape == (2, 3)


def test_m_only_for_pure_power():
    with pytest.raises(AttributeError):
        build_two_power(3.0, 2.0).m


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_argument_rejected(bad):
    with pytest.raises(ValueError):
        pure_power(2.0).phi(np.array([0.0, bad]))


@pytest.mark.parametrize("m1, m2, a, b", [(0.5, 2, 0.5, 2), (2, 1.0, 0.5, 2), (2, 3, 2, 1), (2, 3, 0, 1)])
def test_invalid_parameters(m1, m2, a, b):
    with pytest.raises(ValueError):
        build_two_power(m1, m2, a, b)


def test_two_power_pieces():
    nl = build_two_power(3.0, 2.0, 0.5, 2.0)
    assert nl.phi(0.25) == pytest.approx(0.25**3)
    assert nl.phi(3.0) == pytest.approx(9.0)
    assert nl.phi_prime(0.25) == pytest.approx(3 * 0.25**2)
    assert nl.phi_prime(3.0) == pytest.approx(6.0)
    assert nl.smooth


@pytest.mark.parametrize("m1, m2", [(3.0, 2.0), (2.5, 1.8), (2.0, 3.0), (1.5, 1.5)])
def test_bridge_is_c1_at_joins(m1, m2):
    nl = build_two_power(m1, m2)
    for j in nl.joins():
        eps = 1e-9
        assert nl.phi(j - eps) == pytest.approx(nl.phi(j + eps), abs=1e-7)
        assert nl.phi_prime(j - eps) == pytest.approx(nl.phi_prime(j + eps), abs=1e-6)


def test_bridge_impossible_when_phi_a_exceeds_phi_b():
    # a^m2 > b^m1 for a = 1/16, b = 1/8 with m1 = 3, m2 = 2
    with pytest.raises(ConstructionError):
        build_two_power(2.0, 3.0, 1 / 16, 1 / 8)


def test_clamped_bridge_is_monotone_but_not_smooth():
    with pytest.warns(UserWarning, match="clamped"):
        nl = build_two_power(1.2, 6.0, 0.5, 1.0)
    assert not nl.smooth
    u = np.linspace(0.0, 2.0, 4001)
    assert np.all(np.diff(nl.phi(u)) > 0)
    assert np.all(nl.phi_prime(u[1:]) > 0)


@settings(max_examples=60, deadline=None)
@given(m1=exponents, m2=exponents, u=args)
def test_phi_odd_and_psi_even(m1, m2, u):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        nl = build_two_power(m1, m2)
    assert nl.phi(-u) == -nl.phi(u)
    assert nl.psi(-u) == nl.psi(u)
    assert nl.psi(u) >= 0.0


@settings(max_examples=40, deadline=None)
@given(m1=exponents, m2=exponents)
def test_phi_strictly_increasing(m1, m2):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        nl = build_two_power(m1, m2)
    u = np.linspace(-4.0, 4.0, 2001)
    assert np.all(np.diff(nl.phi(u)) > 0)


@settings(max_examples=40, deadline=None)
@given(m1=exponents, m2=exponents, u=st.floats(min_value=0.05, max_value=4.0))
def test_phi_prime_matches_difference_quotient(m1, m2, u):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        nl = build_two_power(m1, m2)
    if not nl.smooth and min(abs(u - 0.5), abs(u - 2.0)) < 1e-5:
        return
    eps = 1e-6
    fd = (nl.phi(u + eps) - nl.phi(u - eps)) / (2 * eps)
    assert nl.phi_prime(u) == pytest.approx(fd, rel=1e-5, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(m1=exponents, m2=exponents, u=st.floats(min_value=-4.0, max_value=4.0))
def test_psi_is_primitive_of_phi(m1, m2, u):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        nl = build_two_power(m1, m2)
    pts = [p for p in (0.5, 2.0, -0.5, -2.0) if min(0, u) < p < max(0, u)] or None
    ref, _ = integrate.quad(nl.phi, 0.0, u, points=pts, epsabs=0.0, epsrel=1e-13, limit=200)
    assert nl.psi(u) == pytest.approx(ref, rel=1e-8, abs=1e-13)


def test_scale_multiplies_everything():
    a, b = build_two_power(3.0, 2.0), build_two_power(3.0, 2.0, scale=2.5)
    u = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(b.phi(u), 2.5 * a.phi(u))
    np.testing.assert_allclose(b.phi_prime(u), 2.5 * a.phi_prime(u))
    np.testing.assert_allclose(b.psi(u), 2.5 * a.psi(u))


def test_growth_conditions_hold_for_two_power():
    rep = verify_growth_conditions(build_two_power(3.0, 2.0), 3.0, 2.0)
    assert rep.ok
    assert 0 < rep.c1_best <= 3.0  # 3 on |u| <= a, smaller on the bridge
    assert 0 < rep.c2_best <= 2.0


def test_growth_conditions_fail_for_wrong_exponents():
    # phi' = 3u^2 cannot dominate c|u|^1 near zero
    rep = verify_growth_conditions(pure_power(3.0), 2.0, 3.0)
    assert not rep.ok
    assert rep.c1_best < 1e-6


def test_describe_round_trips_parameters():
    d = build_two_power(2.5, 1.8, 0.4, 3.0).describe()
    assert d == {"kind": "two_power", "m1": 2.5, "m2": 1.8, "a": 0.4, "b": 3.0, "scale": 1.0}
