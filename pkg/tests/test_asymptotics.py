import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varorder.asymptotics import (
    KernelSequence,
    LimitSweepReport,
    limit_product_lower,
    limit_product_upper,
    lower_target,
    operator_limit,
    perturbed_sequence,
    power_oracle_lower,
    power_oracle_upper,
    power_sequence,
    upper_target,
)
from varorder.functions import bump, cos_x1
from varorder.kernel import Power, lower_moment, upper_moment
from varorder.normalizer import cphi_direct


def _closed_C(n, s):
    s = mp.mpf(s)
    return 2**s * mp.gamma((n + s) / 2) / (mp.pi ** (mp.mpf(n) / 2) * abs(mp.gamma(-s / 2)))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_targets_are_limits_of_the_closed_form(n):
    mp.mp.dps = 40
    e = mp.mpf("1e-20")
    lo = _closed_C(n, 2 - e) / e
    up = _closed_C(n, e) / e
    assert lower_target(n) == pytest.approx(float(lo), rel=1e-15)
    assert upper_target(n) == pytest.approx(float(up), rel=1e-15)


@given(st.integers(1, 3), st.floats(0.1, 1.9), st.floats(0.1, 10.0))
def test_power_oracles_match_computed_products(n, s, R):
    phi = Power(s)
    C = cphi_direct(phi, n, 1e-10).value
    assert C * lower_moment(phi, R).value == pytest.approx(power_oracle_lower(n, s, R), rel=1e-8)
    assert C * upper_moment(phi, R).value == pytest.approx(power_oracle_upper(n, s, R), rel=1e-8)


def test_sequences_and_validation():
    assert power_sequence("to-2")(3).sigma == 2 - 1 / 8
    assert power_sequence("to-0")(3).sigma == 1 / 8
    c = perturbed_sequence("to-0")(4).certificate()
    assert 0 < c.sigma_lower <= c.sigma_upper < 2
    with pytest.raises(ValueError):
        KernelSequence("x", "to-1", Power)
    with pytest.raises(ValueError):
        limit_product_lower(power_sequence("to-0"), 1)
    with pytest.raises(ValueError):
        limit_product_upper(power_sequence("to-2"), 1)


@pytest.mark.parametrize("name", ["power", "sumpowers"])
@pytest.mark.parametrize("n", [1, 2])
def test_moment_limits_converge(name, n):
    seq = power_sequence if name == "power" else perturbed_sequence
    lo = limit_product_lower(seq("to-2"), n, ks=range(4, 11))
    up = limit_product_upper(seq("to-0"), n, ks=range(4, 11))
    for rep in (lo, up):
        assert rep.passed and rep.tail_monotone()
        assert rep.deviations[0] > rep.deviations[-1]


def test_operator_limits_on_bump_and_cosine():
    (r2,) = operator_limit(power_sequence("to-2"), bump(1), [0.0], ks=range(6, 11))
    (r0,) = operator_limit(power_sequence("to-0"), bump(1), [0.0], ks=range(6, 11))
    assert r2.targets[-1] == 8.0 and r0.targets[-1] == 1.0
    assert r2.passed and r0.passed
    # cosine is an eigenfunction for every kernel: the value is exactly cos(x)
    (rc,) = operator_limit(power_sequence("to-2"), cos_x1(1), [0.4], ks=[2, 5])
    assert np.allclose(rc.values, np.cos(0.4), atol=1e-8)


def test_report_deviation_conventions():
    r = LimitSweepReport("t", ks=[1, 2], values=[1.5, 0.01], targets=[1.0, 0.0])
    assert list(r.deviations) == [0.5, 0.01]
    assert r.passed is False and r.final_deviation == 0.01
    assert list(r.rows())[0] == (1, 1.5, 1.0, 0.5)


def test_operator_limit_outside_support_tends_to_zero():
    (r,) = operator_limit(power_sequence("to-0"), bump(1), [2.5], ks=[4, 8, 12])
    assert r.targets == [0.0, 0.0, 0.0]
    assert abs(r.values[-1]) < abs(r.values[0]) and abs(r.values[-1]) < 2e-3


def test_moment_targets_do_not_depend_on_R():
    for R in (0.5, 2.0):
        rep = limit_product_lower(power_sequence("to-2"), 2, R, ks=[10])
        assert rep.targets[-1] == pytest.approx(2 / np.pi) and rep.passed
