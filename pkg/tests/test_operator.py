import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varorder.errors import ToleranceError
from varorder.functions import affine, bump, cos_x1, power_decay, quadratic_cap, w_R
from varorder.kernel import LogLower, LogUpper, Power, SumPowers, upper_moment
from varorder.normalizer import cphi_power_closed_form, sphere_area
from varorder.operator import (
    ExtremalParams,
    linear_apply,
    pucci_minus,
    pucci_plus,
    second_difference,
    tail_bound,
    w_R_gap_value,
    w_R_subsolution_gap,
)

# Independent one-dimensional quadratures (mpmath or piecewise Gauss-Legendre
# split at every kink of the integrand), frozen with their own accuracy.
QCAP_P05_X01 = (1.0518602784519853, 1e-15)
BUMP_P1_X0 = (-2.3282094532300118, 1e-15)
POWER_DECAY_P1_X05 = (396.479856553, 5e-9)
# two-dimensional polar quadrature with scipy
BUMP2_P1_X03 = (-2.159548458090955, 2e-9)

FAMILIES = [Power(0.5), Power(1.5), SumPowers(0.5, 1.5), LogLower(1.0, 1.5), LogUpper(0.5, 1.5)]


def _close(v, ref):
    value, acc = ref
    return abs(v.value - value) <= v.error + acc * max(1.0, abs(value))


def test_second_difference_of_quadratic_is_exact():
    u = quadratic_cap(2, 10.0)
    x = np.array([0.3, -0.2])
    y = np.array([[0.1, 0.2], [-0.5, 0.4]])
    assert np.allclose(second_difference(u, x, y), 2 * (y * y).sum(1), rtol=1e-13)


def test_linear_against_frozen_oracles():
    assert _close(linear_apply(quadratic_cap(1), [0.1], Power(0.5)), QCAP_P05_X01)
    assert _close(linear_apply(bump(1), [0.0], Power(1.0)), BUMP_P1_X0)
    assert _close(linear_apply(bump(2), [0.3, 0.0], Power(1.0)), BUMP2_P1_X03)


def test_pole_split_against_frozen_oracle():
    v = linear_apply(power_decay(1, 2.5, 0.05), [0.5], Power(1.0), 1e-8)
    assert v.pole != 0.0
    assert _close(v, POWER_DECAY_P1_X05)


def test_pucci_on_signed_differences():
    # delta >= 0 everywhere for the cap at 0.1, so both extremal operators
    # are multiples of the linear one
    ext = ExtremalParams(0.5, 3.0)
    u, x, phi = quadratic_cap(1), [0.1], Power(0.5)
    L = QCAP_P05_X01[0]
    assert pucci_plus(u, x, phi, ext).value == pytest.approx(2 * 3.0 * L, rel=1e-10)
    assert pucci_minus(u, x, phi, ext).value == pytest.approx(2 * 0.5 * L, rel=1e-10)


@pytest.mark.parametrize("phi", FAMILIES)
def test_cosine_identity_1d(phi):
    v = linear_apply(cos_x1(1), [0.0], phi)
    assert abs(v.value + 1.0) <= v.error + 1e-12


def test_cosine_identity_2d_and_shift():
    v = linear_apply(cos_x1(2), [0.0, 0.7], SumPowers(0.5, 1.5))
    assert abs(v.value + 1.0) <= v.error + 1e-12
    w = linear_apply(cos_x1(1), [math.pi / 3], Power(1.0))
    assert abs(w.value + 0.5) <= w.error + 1e-12


def test_extremal_constant_multiples_on_cosine():
    ext = ExtremalParams(1.0, 2.0)
    u, x, phi = cos_x1(1), [0.0], Power(1.0)
    assert pucci_plus(u, x, phi, ext).value == pytest.approx(-2.0, abs=1e-8)
    assert pucci_minus(u, x, phi, ext).value == pytest.approx(-4.0, abs=1e-8)


@given(
    st.sampled_from(["bump", "cap", "wR"]),
    st.floats(-0.9, 0.9),
    st.floats(0.2, 1.0),
    st.floats(1.0, 3.0),
    st.sampled_from(FAMILIES),
)
def test_extremal_ordering_and_duality(name, x, lam, ratio, phi):
    u = {"bump": bump(1), "cap": quadratic_cap(1, 1.2), "wR": w_R(1, 0.5)}[name]
    ext = ExtremalParams(lam, lam * ratio)
    L = linear_apply(u, [x], phi)
    P = pucci_plus(u, [x], phi, ext)
    M = pucci_minus(u, [x], phi, ext)
    # M- <= lam-scaled and Lam-scaled linear values <= M+
    assert M.value <= 2 * lam * L.value + M.error + 2 * lam * L.error
    assert 2 * ext.Lam * L.value <= P.value + P.error + 2 * ext.Lam * L.error
    assert M.value <= P.value + M.error + P.error
    Pn = pucci_plus(-u, [x], phi, ext)
    assert Pn.value == pytest.approx(-M.value, rel=1e-12, abs=1e-12)


def test_extremal_params_validation():
    with pytest.raises(ValueError):
        ExtremalParams(0.0, 1.0)
    with pytest.raises(ValueError):
        ExtremalParams(2.0, 1.0)


def test_tail_bound_formula():
    phi = Power(1.0)
    assert tail_bound(2.0, phi, 1, 4.0) == pytest.approx(4 * sphere_area(1) * 2.0 * upper_moment(phi, 4.0).hi)


def test_affine_is_killed_up_to_the_tail():
    u = affine(1, [0.7], 0.3, radius=50.0)
    phi = Power(1.0)
    with pytest.raises(ToleranceError):
        linear_apply(u, [0.0], phi, 1e-6)
    v = linear_apply(u, [0.0], phi, 1.0)
    bound = 0.5 * cphi_power_closed_form(1, 1.0) * tail_bound(u.sup, phi, 1, 50.0)
    assert abs(v.value) <= bound


@pytest.mark.parametrize("phi,n", [(Power(1.0), 1), (SumPowers(0.5, 1.5), 2)])
def test_w_R_gap(phi, n):
    rep = w_R_subsolution_gap(phi, n, lam=1.0, R=4.0, samples=5)
    assert rep.passed
    assert rep.gap == pytest.approx(w_R_gap_value(phi, n, 1.0, 4.0))
    with pytest.raises(ValueError):
        w_R_subsolution_gap(phi, n, lam=1.0, R=2.0)


@given(st.floats(-0.25, 0.25), st.floats(0.3, 2.0), st.sampled_from(FAMILIES[:3]))
def test_extremal_sub_and_superadditivity(x, c, phi):
    # |x| < c keeps x off the kink of the cap
    ext = ExtremalParams(0.5, 2.0)
    u, v = bump(1), quadratic_cap(1, c)
    w = u + v
    P = [pucci_plus(f, [x], phi, ext) for f in (u, v, w)]
    M = [pucci_minus(f, [x], phi, ext) for f in (u, v, w)]
    slack_p = sum(p.error for p in P)
    slack_m = sum(m.error for m in M)
    assert P[2].value <= P[0].value + P[1].value + slack_p
    assert M[2].value >= M[0].value + M[1].value - slack_m
