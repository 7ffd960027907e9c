import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magnetosc.errors import OutOfRange, ScenarioError
from magnetosc.profiles import (
    Constant,
    Exponential,
    Polynomial,
    Sinusoidal,
    Tabulated,
    eval_derivative,
    eval_profile,
    params_from_dict,
    params_to_dict,
    profile_from_dict,
    validate_params,
)
from support import const_params


def test_constant_value_and_derivative():
    assert eval_profile(Constant(3.5), 10.0) == 3.5
    assert eval_derivative(Constant(3.5), 10.0, 1) == 0.0
    assert eval_derivative(Constant(3.5), 10.0, 2) == 0.0


def test_sinusoidal_examples():
    assert eval_profile(Sinusoidal(2.0, 1.0), math.pi / 2) == pytest.approx(2.0, abs=1e-15)
    assert eval_derivative(Sinusoidal(2.0, 3.0), 0.0, 1) == pytest.approx(6.0, abs=1e-15)


def test_polynomial_second_derivative():
    assert eval_derivative(Polynomial((0.0, 0.0, 1.0)), 2.0, 2) == pytest.approx(2.0)


def test_tabulated_knot_hit_and_range():
    tab = Tabulated((0.0, 1.0, 2.0), (0.0, 1.0, 4.0))
    assert eval_profile(tab, 1.0) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(OutOfRange):
        eval_profile(tab, 2.5)
    with pytest.raises(OutOfRange):
        eval_derivative(tab, -0.1, 1)


def test_tabulated_natural_spline_is_c2():
    tab = Tabulated((0.0, 1.0, 2.0, 3.0), (0.0, 1.0, 0.0, 2.0))
    # natural end conditions and continuous second derivative across a knot
    assert eval_derivative(tab, 0.0, 2) == pytest.approx(0.0, abs=1e-12)
    assert eval_derivative(tab, 3.0, 2) == pytest.approx(0.0, abs=1e-12)
    assert eval_derivative(tab, 1.0 - 1e-9, 2) == pytest.approx(eval_derivative(tab, 1.0 + 1e-9, 2), abs=1e-6)


def test_derivative_order_is_checked():
    with pytest.raises(ValueError):
        eval_derivative(Constant(1.0), 0.0, 3)


def test_array_evaluation_matches_scalar():
    prof = Exponential(0.5, -0.3, 1.0)
    ts = np.linspace(0, 3, 7)
    np.testing.assert_allclose(prof.value(ts), [prof.value(float(t)) for t in ts], rtol=0, atol=1e-15)


def test_validate_params_examples():
    assert validate_params(const_params(B=1.0)).valid
    falling = const_params(m1=Polynomial((1.0, -1.0)), interval=(0.0, 2.0))
    report = validate_params(falling)
    assert not report.valid
    assert report.violations[0].t >= 1.0
    assert not validate_params(const_params(e=0.0)).valid
    assert not validate_params(const_params(hbar=-1.0)).valid


def test_profile_dict_round_trip():
    for prof in (Constant(2.0), Polynomial((1.0, 2.0)), Sinusoidal(1.0, 2.0, 0.3, 4.0),
                 Exponential(1.0, 0.1, 2.0), Tabulated((0.0, 1.0), (1.0, 3.0))):
        assert profile_from_dict(prof.to_dict()) == prof
    params = const_params(C3=0.5, B=2.0)
    assert params_from_dict(params_to_dict(params)) == params


def test_unknown_kind_rejected():
    with pytest.raises(ScenarioError):
        profile_from_dict({"kind": "noise", "value": 1.0})


closed_form_profiles = st.one_of(
    st.builds(Polynomial, st.lists(st.floats(-2, 2), min_size=1, max_size=4).map(tuple)),
    st.builds(Sinusoidal, st.floats(-2, 2), st.floats(0.1, 3), st.floats(-3, 3), st.floats(-2, 2)),
    st.builds(Exponential, st.floats(-2, 2), st.floats(-1, 1), st.floats(-2, 2)),
)


def _fd_agrees(exact, approx, scale):
    return abs(exact - approx) <= 1e-6 * max(abs(exact), scale)


@settings(max_examples=200, deadline=None)
@given(closed_form_profiles, st.floats(-3, 3))
def test_derivatives_match_finite_differences(prof, t):
    h = 1e-5
    fd1 = (prof.value(t + h) - prof.value(t - h)) / (2 * h)
    fd2 = (prof.derivative(t + h, 1) - prof.derivative(t - h, 1)) / (2 * h)
    # values near zero are compared against the profile's own scale
    scale = max(1.0, abs(prof.value(t)))
    assert _fd_agrees(prof.derivative(t, 1), fd1, scale)
    assert _fd_agrees(prof.derivative(t, 2), fd2, scale)


@settings(max_examples=50, deadline=None)
@given(closed_form_profiles, st.floats(-3, 3))
def test_evaluation_is_pure(prof, t):
    assert prof.value(t) == prof.value(t)
    assert prof.derivative(t, 2) == prof.derivative(t, 2)
