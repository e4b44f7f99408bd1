import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from focklab import InvalidParameterError, MomentTable, check_phi_condition, make_weight
from focklab.weights import fock_sobolev_log_moments


def test_classical_phi_value():
    assert make_weight("classical", 1.0).phi(2.0) == pytest.approx(2.0)


def test_fock_sobolev_parameter_constraint():
    make_weight("fock_sobolev", 1.0, 1, 3.0)
    with pytest.raises(InvalidParameterError, match="2m/alpha"):
        make_weight("fock_sobolev", 1.0, 2, 3.0)


@pytest.mark.parametrize("kw", [dict(kind="classical", alpha=0.0), dict(kind="classical", alpha=-1.0),
                                dict(kind="fock_sobolev", alpha=1.0, m=-1, big_a=3.0),
                                dict(kind="custom_radial"), dict(kind="elliptic")])
def test_invalid_parameters(kw):
    with pytest.raises(InvalidParameterError):
        make_weight(**kw)


def test_classical_laplacian_constant():
    c = check_phi_condition(make_weight("classical", 1.0), np.linspace(0.05, 10, 200))
    assert c.ok
    assert c.c_est == pytest.approx(2.0, abs=1e-6)
    assert c.C_est == pytest.approx(2.0, abs=1e-6)


def test_fock_sobolev_laplacian_matches_symbolic():
    r = np.linspace(0.05, 10, 200)
    w = make_weight("fock_sobolev", 1.0, 1, 3.0)
    # Delta of -(m/2) log(A + r^2) is -2 m A / (A + r^2)^2
    exact = 2.0 - 2 * 3.0 / (3.0 + r**2) ** 2
    assert np.max(np.abs(w.laplacian(r) - exact)) < 1e-6
    c = check_phi_condition(w, r)
    assert 0 < c.c_est <= c.C_est < 2.0


def test_linear_profile_is_flagged():
    c = check_phi_condition(make_weight("custom_radial", profile=lambda s: s), np.linspace(0.01, 10, 300))
    assert not c.ok
    assert len(c.violating_radii) > 0


@pytest.mark.parametrize("alpha,k,expected", [(1.0, 0, math.pi), (2.0, 2, math.pi / 4)])
def test_moment_examples(alpha, k, expected):
    tab = MomentTable.build(make_weight(alpha=alpha), 5)
    assert tab.moment(k) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_moments_against_factorial_closed_form(alpha):
    tab = MomentTable.build(make_weight(alpha=alpha), 30)
    exact = np.array([math.pi * math.factorial(k) / alpha ** (k + 1) for k in range(31)])
    assert np.max(np.abs(tab.moment(np.arange(31)) / exact - 1)) <= 1e-10
    assert np.max(tab.rel_err) <= 1e-10


def test_fock_sobolev_moment_trapezoid_oracle():
    w = make_weight("fock_sobolev", 1.0, 1, 3.0)
    tab = MomentTable.build(w, 3)
    r = np.linspace(0.0, 12.0, 400_001)
    # e^{-2 phi} = (3 + r^2) e^{-r^2}
    oracle = 2 * np.pi * np.trapezoid(r * (3 + r**2) * np.exp(-(r**2)), r)
    assert tab.moment(0) == pytest.approx(oracle, rel=1e-8)
    assert tab.moment(0) == pytest.approx(math.pi * (3 + 1), rel=1e-12)


def test_fock_sobolev_binomial_log_moments():
    w = make_weight("fock_sobolev", 0.7, 3, 10.0)
    tab = MomentTable.build(w, 25)
    closed = fock_sobolev_log_moments(w, 25)
    assert np.max(np.abs(tab.log_moments - closed)) < 1e-10


def test_incomplete_moment_examples():
    tab = MomentTable.build(make_weight(alpha=1.0), 5)
    assert tab.incomplete_moment(0, 0.0) == 0.0
    assert tab.incomplete_moment(0, 1.0) == pytest.approx(math.pi * (1 - math.exp(-1)), rel=1e-12)
    assert tab.incomplete_moment(0, 30.0) == pytest.approx(math.pi, rel=1e-10)


def test_incomplete_moment_custom_weight_zero_radius():
    w = make_weight("custom_radial", profile=lambda s: s**2 / 2 + 0.1 * np.sin(s))
    tab = MomentTable.build(w, 3)
    assert tab.incomplete_moment(2, 0.0) == 0.0
    assert tab.incomplete_moment(2, 40.0) == pytest.approx(tab.moment(2), rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 3.0), st.integers(0, 20))
def test_log_ratios_exact_for_classical(alpha, k):
    tab = MomentTable.build(make_weight(alpha=alpha), 21)
    assert tab.log_ratios[k] == pytest.approx(math.log((k + 1) / alpha), abs=1e-12)


def test_moment_csv_columns():
    text = MomentTable.build(make_weight(), 3).to_csv().splitlines()
    assert text[0] == "k,m_k,rel_err"
    assert len(text) == 5
