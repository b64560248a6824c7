import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varorder.errors import ConfigError
from varorder.kernel import (
    LogLower,
    LogUpper,
    Power,
    SumPowers,
    UserTable,
    WeakScalingCertificate,
    check_weak_scaling,
    eval_phi,
    kernel_from_mapping,
    lower_moment,
    moment_inequalities,
    rhs_scale,
    upper_moment,
)

# 40-digit mpmath quadrature, computed once and frozen
SUMPOWERS_LOWER_1 = 0.42920367320510338
SUMPOWERS_UPPER_1 = 0.42920367320510338
LOGLOWER_LOWER_2 = 1.9573207144446011
LOGUPPER_UPPER_HALF = 2.2107126690930459

sigmas = st.floats(0.05, 1.95)
radii = st.floats(1e-3, 1e3)


def test_eval_phi_examples():
    assert eval_phi(Power(1.0), 2.0) == pytest.approx(2.0, rel=1e-15)
    assert eval_phi(SumPowers(0.5, 1.5), 1.0) == pytest.approx(2.0, rel=1e-15)
    assert eval_phi(LogLower(1.0, 1.5), 1.0) == pytest.approx(math.log(2.0) ** -0.25, rel=1e-14)


def test_eval_phi_rejects_bad_radius():
    with pytest.raises(ValueError):
        eval_phi(Power(1.0), 0.0)
    with pytest.raises(ValueError):
        eval_phi(Power(1.0), -1.0)


def test_table_refuses_extrapolation():
    t = UserTable((0.1, 1.0, 10.0), (0.1, 1.0, 10.0))
    assert eval_phi(t, 0.5) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        eval_phi(t, 20.0)


def test_family_validation():
    with pytest.raises(ValueError):
        Power(2.0)
    with pytest.raises(ValueError):
        SumPowers(1.5, 0.5)
    with pytest.raises(ValueError):
        LogLower(1.0, 1.0)


@pytest.mark.parametrize(
    "phi",
    [Power(1.0), Power(0.3), SumPowers(0.5, 1.5), LogLower(1.0, 1.5), LogUpper(0.5, 1.5)],
)
def test_certificates_hold_on_sample(phi):
    scan = check_weak_scaling(phi, phi.certificate())
    assert scan.certified
    assert scan.a_needed == pytest.approx(1.0)


def test_exponent_mismatch_is_reported():
    scan = check_weak_scaling(Power(1.0), WeakScalingCertificate(1.0, 1.2, 1.5))
    assert not scan.certified
    # every ordered pair with R > r violates the lower inequality
    assert len(scan.violations) == scan.pairs


def test_scaling_grid_must_span_six_decades():
    with pytest.raises(ValueError):
        check_weak_scaling(Power(1.0), Power(1.0).certificate(), grid=np.geomspace(1, 100, 10))


@given(sigmas, radii)
def test_power_moments_match_closed_forms(s, R):
    lo = lower_moment(Power(s), R)
    up = upper_moment(Power(s), R)
    assert abs(lo.value - R ** (2 - s) / (2 - s)) <= lo.error + 1e-14 * lo.value
    assert abs(up.value - R**-s / s) <= up.error + 1e-14 * up.value


def test_moment_examples():
    assert lower_moment(Power(1.0), 1.0).value == pytest.approx(1.0, rel=1e-13)
    assert lower_moment(Power(0.5), 2.0).value == pytest.approx(2**1.5 / 1.5, rel=1e-13)
    assert upper_moment(Power(0.5), 4.0).value == pytest.approx(1.0, rel=1e-13)
    assert upper_moment(Power(1.9), 1.0).value == pytest.approx(1 / 1.9, rel=1e-13)


def test_moments_against_quadrature_oracle():
    cases = [
        (lower_moment(SumPowers(0.5, 1.5), 1.0), SUMPOWERS_LOWER_1),
        (upper_moment(SumPowers(0.5, 1.5), 1.0), SUMPOWERS_UPPER_1),
        (lower_moment(LogLower(1.0, 1.5), 2.0), LOGLOWER_LOWER_2),
        (upper_moment(LogUpper(0.5, 1.5), 0.5), LOGUPPER_UPPER_HALF),
    ]
    for m, ref in cases:
        assert abs(m.value - ref) <= m.error + 4e-16 * ref


@given(st.sampled_from(["power", "sum", "loglower", "logupper"]), radii, st.floats(1.01, 10.0))
def test_moment_monotonicity(fam, R, q):
    phi = {
        "power": Power(0.7),
        "sum": SumPowers(0.4, 1.6),
        "loglower": LogLower(0.8, 1.4),
        "logupper": LogUpper(0.6, 1.2),
    }[fam]
    assert lower_moment(phi, R * q).lo > lower_moment(phi, R).hi
    assert upper_moment(phi, R * q).hi < upper_moment(phi, R).lo


def test_moment_inequality_examples():
    m = moment_inequalities(Power(1.0), Power(1.0).certificate(), 1.0, 0.5)
    assert m.passed
    # ratio lower(1)/lower(1/2) = 2 against the bound 3
    assert m.margins[2] == pytest.approx(1.0, rel=1e-10)
    tight = moment_inequalities(Power(1.5), Power(1.5).certificate(), 1.0, 0.3)
    assert tight.upper_bracket and abs(tight.margins[1]) < 1e-12
    assert moment_inequalities(SumPowers(0.5, 1.5), SumPowers(0.5, 1.5).certificate(), 1.0, 0.1).passed


@given(
    st.sampled_from(["power", "sum", "loglower", "logupper"]),
    st.floats(1e-2, 1e2),
    st.floats(0.02, 0.98),
)
def test_moment_inequalities_property(fam, R, t):
    phi = {
        "power": Power(1.3),
        "sum": SumPowers(0.5, 1.5),
        "loglower": LogLower(1.0, 1.5),
        "logupper": LogUpper(0.5, 1.5),
    }[fam]
    assert moment_inequalities(phi, phi.certificate(), R, t).passed


def test_wrong_certificate_breaks_brackets():
    m = moment_inequalities(SumPowers(0.5, 1.5), WeakScalingCertificate(1.0, 1.0, 1.2), 10.0, 0.5)
    assert not m.passed


def test_rhs_scale_examples():
    assert rhs_scale(Power(1.0), 1.0, 1).scale == pytest.approx(2.0, rel=1e-12)
    assert rhs_scale(Power(1.0), 2.0, 1).scale == pytest.approx(4.0, rel=1e-12)
    assert rhs_scale(Power(0.5), 1.0, 1).scale == pytest.approx(4.0, rel=1e-12)


@given(sigmas, st.floats(0.1, 10.0))
def test_rhs_scale_power_closed_form(s, R):
    # (2/s) R^s for a pure power
    assert rhs_scale(Power(s), R, 1).scale == pytest.approx(2 / s * R**s, rel=1e-10)


def test_kernel_config_parsing(tmp_path):
    phi, cert = kernel_from_mapping({"family": "sumpowers", "sigma_lower": "0.5", "sigma_upper": "1.5"})
    assert phi == SumPowers(0.5, 1.5) and cert.sigma0 == 0.5
    phi, cert = kernel_from_mapping({"family": "power", "sigma": "1.5", "a": "2"})
    assert cert.a == 2.0
    with pytest.raises(ConfigError):
        kernel_from_mapping({"family": "nope"})
    with pytest.raises(ConfigError):
        kernel_from_mapping({"family": "power"})
    with pytest.raises(ConfigError):
        kernel_from_mapping({"family": "power", "sigma": "abc"})
    r = np.geomspace(1e-4, 1e4, 50)
    np.savetxt(tmp_path / "t.txt", np.column_stack([r, r**1.2]))
    phi, cert = kernel_from_mapping({"family": "table", "table": "t.txt"}, tmp_path)
    assert cert.sigma_lower == pytest.approx(1.2) and cert.sigma_upper == pytest.approx(1.2)


def test_table_moments_follow_power():
    r = np.geomspace(1e-6, 1e6, 200)
    t = UserTable(tuple(r), tuple(r**0.8))
    assert lower_moment(t, 1.0).value == pytest.approx(1 / 1.2, rel=1e-9)
    assert upper_moment(t, 1.0).value == pytest.approx(1 / 0.8, rel=1e-9)
