"""Unit and property tests for the drift-family and scalar-function layer."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divmarket import model
from divmarket.errors import DomainError, ParameterError


def power_spec(delta=0.2, p=1.0, q=1.0):
    return model.DriftSpec(delta, model.PowerLaw(p=p, q=q))


def patched_spec(delta=0.2, p=1.0, q=1.0, c=0.5, x_switch=0.1):
    return model.DriftSpec(delta, model.PatchedPowerLaw(p=p, q=q, c=c, x_switch=x_switch))


# ---------------------------------------------------------------------------
# Construction and validation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("delta", [0.0, 0.5, 0.6, -0.1, 1.0])
def test_delta_outside_open_interval_rejected(delta):
    with pytest.raises(ParameterError):
        model.DriftSpec(delta, model.PowerLaw(1.0, 1.0))


@pytest.mark.parametrize("p,q", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_power_family_requires_positive_parameters(p, q):
    with pytest.raises(ParameterError):
        model.DriftSpec(0.2, model.PowerLaw(p, q))


def test_patched_switch_point_must_be_interior():
    with pytest.raises(ParameterError):
        model.DriftSpec(0.2, model.PatchedPowerLaw(1.0, 1.0, 0.5, 0.9))
    with pytest.raises(ParameterError):
        model.DriftSpec(0.2, model.PatchedPowerLaw(1.0, 1.0, 0.5, 0.0))


def test_right_end_is_one_minus_delta():
    assert power_spec(delta=0.3).right_end == pytest.approx(0.7)


# ---------------------------------------------------------------------------
# g evaluation
# ---------------------------------------------------------------------------


def test_g_power_law_q1_spot_value():
    # 1 / (0.8 - 0.3) = 2 exactly
    assert model.g_eval(power_spec(), 0.3) == pytest.approx(2.0, abs=1e-14)


def test_g_power_law_q2_spot_value():
    # 2 / (0.8 - 0.6)^2 = 50 exactly
    assert model.g_eval(power_spec(p=2.0, q=2.0), 0.6) == pytest.approx(50.0, abs=1e-12)


def test_g_patched_negative_branch_spot_value():
    # left branch is -c / x: -0.5 / 0.05 = -10
    assert model.g_eval(patched_spec(), 0.05) == pytest.approx(-10.0, abs=1e-12)


@pytest.mark.parametrize("x", [-0.5, 0.0, 0.8, 0.9])
def test_g_eval_domain_error_outside_open_interval(x):
    with pytest.raises(DomainError):
        model.g_eval(power_spec(), x)


def test_g_clamped_never_raises_and_matches_interior():
    spec = power_spec()
    xs = np.array([-1.0, 0.0, 0.3, 0.79, 0.8, 2.0])
    vals = model.g_clamped(spec, xs)
    assert np.all(np.isfinite(vals))
    assert vals[2] == pytest.approx(model.g_eval(spec, 0.3))


def test_patched_is_continuous_at_joins():
    spec = patched_spec(c=2.0, x_switch=0.15)
    lo, hi = model._bridge_interval(spec)
    for x in (lo, hi):
        below = model.g_eval(spec, x - 1e-11)
        above = model.g_eval(spec, x + 1e-11)
        assert abs(below - above) < 1e-6 * (1.0 + abs(below))
    # tighter: evaluations from both sides at the joins agree to 1e-12
    eps = 1e-13
    for x in (lo, hi):
        assert model.g_eval(spec, x - eps) == pytest.approx(
            model.g_eval(spec, x + eps), abs=1e-9
        )


def test_g_blows_up_at_right_endpoint():
    spec = power_spec()
    vals = [model.g_eval(spec, 0.8 - 2.0 ** -k) for k in range(4, 30)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 1e6


# ---------------------------------------------------------------------------
# psi and the criterion coefficients
# ---------------------------------------------------------------------------


def test_psi_zero_when_g_is_zero_at_half():
    spec = model.DriftSpec(0.1, model.Custom(lambda x: 0.0))
    # s(-0 + 1/2) - s^2 at s = 0.5 is 0.25 - 0.25 = 0
    assert model.psi(spec, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_psi_spot_value_power_q1():
    # 0.3 * (-2 + 0.5) - 0.09 = -0.54
    assert model.psi(power_spec(), 0.3) == pytest.approx(-0.54, abs=1e-14)


def test_psi_diverges_to_minus_infinity_at_right_end():
    spec = power_spec()
    vals = [model.psi(spec, 0.8 - 2.0 ** -k) for k in range(4, 30)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < -1e5


@given(
    s=st.floats(min_value=0.01, max_value=0.79),
    p=st.floats(min_value=0.01, max_value=5.0),
    q=st.floats(min_value=0.1, max_value=3.0),
)
@settings(max_examples=200, deadline=None)
def test_psi_matches_definition_pointwise(s, p, q):
    spec = power_spec(p=p, q=q)
    expected = s * (-model.g_eval(spec, s) + 0.5) - s * s
    assert model.psi(spec, s) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_coefficient_values_n2():
    consts = model.A_coeffs(2, 0.2)
    assert consts.a2 == pytest.approx(6.25)
    assert consts.a1 == pytest.approx(6.25)
    assert consts.x0 == 0.5


def test_coefficient_values_n5():
    consts = model.A_coeffs(5, 0.2)
    assert consts.a2 == pytest.approx(6.25)
    assert consts.a1 == pytest.approx(10.0)


@pytest.mark.parametrize("n,delta", [(1, 0.2), (2, 0.6), (2, 0.0), (0, 0.1)])
def test_coefficients_reject_bad_parameters(n, delta):
    with pytest.raises(ParameterError):
        model.A_coeffs(n, delta)


@given(n=st.integers(min_value=2, max_value=50), delta=st.floats(min_value=0.01, max_value=0.49))
@settings(max_examples=200, deadline=None)
def test_coefficient_ratio_property(n, delta):
    consts = model.A_coeffs(n, delta)
    ratio = 2.0 / (1.0 + 1.0 / (n - 1))
    assert consts.a1 / consts.a2 == pytest.approx(ratio, rel=1e-12)
    assert consts.a1 >= consts.a2 - 1e-12
    assert consts.a1 < 2.0 * consts.a2
    if n == 2:
        assert consts.a1 == pytest.approx(consts.a2, rel=1e-14)


def test_a2_symmetric_about_half():
    zs = np.linspace(0.05, 0.95, 91)
    assert np.allclose(model.A2_of(zs), model.A2_of(1.0 - zs), atol=1e-12)


def test_a1_is_constant_multiple_of_a2():
    zs = np.linspace(0.05, 0.95, 17)
    ratio = model.A1_of(4, zs) / model.A2_of(zs)
    assert np.allclose(ratio, 2.0 / (1.0 + 1.0 / 3.0), atol=1e-12)


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------


def test_power_admissible_but_not_bounded_at_zero():
    report = model.check_admissible(power_spec())
    assert report.admissible
    assert report.continuous
    assert report.blows_up_at_right_endpoint
    assert not report.boundedness_at_zero
    assert not report.sampled


def test_patched_admissible_and_bounded_at_zero():
    report = model.check_admissible(patched_spec())
    assert report.admissible
    assert report.boundedness_at_zero
    assert not report.sampled


def test_custom_constant_not_admissible():
    spec = model.DriftSpec(0.2, model.Custom(lambda x: 0.0))
    report = model.check_admissible(spec)
    assert report.sampled
    assert not report.blows_up_at_right_endpoint
    assert not report.admissible


def test_custom_mimicking_patched_detected_admissible():
    def g(x):
        if x <= 0.1:
            return -0.5 / x
        lo_val, hi = -0.5 / 0.1, 0.5
        hi_val = 1.0 / (0.8 - 0.5)
        if x < hi:
            t = (x - 0.1) / (hi - 0.1)
            return lo_val + t * (hi_val - lo_val)
        return 1.0 / (0.8 - x)

    report = model.check_admissible(model.DriftSpec(0.2, model.Custom(g)))
    assert report.sampled
    assert report.blows_up_at_right_endpoint
    assert report.boundedness_at_zero
    assert report.admissible


def test_custom_with_genuine_jump_flagged_discontinuous():
    g = lambda x: (0.0 if x < 0.4 else 5.0) + 1.0 / (0.8 - x)
    report = model.check_admissible(model.DriftSpec(0.2, model.Custom(g)))
    assert not report.continuous
    assert not report.admissible
