import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varorder.barrier import (
    P_OFFSET,
    BarrierParams,
    _evidence,
    capped_barrier_build,
    check_ring_radii,
    find_kappa0,
    p_constraints_hold,
    phi1_eval,
    ring_radii,
    rho0,
    sample_radii,
    select_p,
    sphere_margin,
    verify_capped,
)
from varorder.kernel import Power


def test_select_p_examples():
    # (p + 2) lam / (2n) >= Lam solved for p
    assert select_p(2, 1.0, 2.0) == 6.0
    assert select_p(1, 1.0, 1.0) == 2.0 + P_OFFSET
    assert select_p(3, 1.0, 1.0) == 4.0 + P_OFFSET


@given(st.integers(1, 4), st.floats(0.05, 1.0), st.floats(1.0, 20.0))
def test_select_p_is_feasible_and_tight(n, lam, ratio):
    Lam = lam * ratio
    p = select_p(n, lam, Lam)
    assert p_constraints_hold(n, lam, Lam, p)
    # lowering p by 1% breaks one of the two constraints
    assert not p_constraints_hold(n, lam, Lam, 0.99 * p)


def test_select_p_grows_as_lambda_vanishes():
    ps = [select_p(2, lam, 1.0) for lam in (1.0, 0.5, 0.1, 0.01)]
    assert all(a < b for a, b in zip(ps, ps[1:]))
    with pytest.raises(ValueError):
        select_p(1, 2.0, 1.0)


def test_sphere_margin_zero_at_the_sphere_root():
    assert sphere_margin(2, 1.0, 2.0, 6.0) == pytest.approx(0.0, abs=1e-14)


def test_phi1_branches():
    p, k0, R = 2.0, 0.5, 1.0
    assert phi1_eval(np.array([0.5]), p, k0, R) == pytest.approx(4.0)
    assert phi1_eval(np.array([1.0]), p, k0, R) == pytest.approx(1.0)
    s = np.linspace(0.0, 50.0, 400)[:, None]
    v = phi1_eval(s, p, k0, R)
    assert np.all(np.diff(v) <= 0) and v[-1] > 0


def test_params_validation():
    with pytest.raises(ValueError):
        BarrierParams(1, 1.0, 1.0, 1.0, 0.5, 1.5)
    with pytest.raises(ValueError):
        BarrierParams(1, 1.0, 1.0, 1.0, 0.5, 3.0, kappa0=0.5 / 8)
    with pytest.raises(ValueError):
        BarrierParams(1, 1.0, 1.0, 1.0, 1.0, 3.0)
    assert BarrierParams(1, 1.0, 1.0, 1.0, 0.5, 3.0).rho0 == 2.0**-8


def test_sample_radii_span():
    r = sample_radii(0.5, 2.0, 32)
    assert r[0] == pytest.approx(1.0) and r[-1] < 2.0 and np.all(np.diff(r) > 0)


@pytest.mark.parametrize("n,p,k0", [(1, 2.0 + P_OFFSET, 1 / 64), (2, 6.0, 1 / 128), (3, 8.0, 2.0**-10)])
def test_capped_barrier_invariants(n, p, k0):
    pr = BarrierParams(n, 1.0, 1.0, 1.0, rho0(n), p, kappa0=k0 * rho0(n) * 4)
    cap = capped_barrier_build(pr)
    rep = verify_capped(cap, samples=3000)
    assert rep.passed, rep
    assert rep.value_at_three_quarters == pytest.approx(2.0, rel=1e-12)
    r0 = cap.inner_radius
    assert cap.profile(r0) == pytest.approx(cap.c0 * (1 - pr.kappa0**p), rel=1e-12)
    assert cap(np.array([[1.0] + [0.0] * (n - 1)]))[0] == 0.0


def test_capped_requires_kappa0():
    with pytest.raises(ValueError):
        capped_barrier_build(BarrierParams(1, 1.0, 1.0, 1.0, 0.5, 3.0))


@given(st.integers(1, 4), st.floats(0.05, 1.95), st.floats(0.1, 10.0))
def test_ring_radii_plumbing(n, sl, R):
    r = ring_radii(n, sl, R)
    assert check_ring_radii(n, sl, R)
    assert np.allclose(r[1:], r[:-1] / 2) and r[0] <= rho0(n) * R


def test_find_kappa0_power_n1():
    s = find_kappa0(Power(1.0), 1, 1.0, 1.0, 0.5, samples=12)
    assert s.passed
    k0 = s.params.kappa0
    assert 0 < k0 <= 0.5 / 16 < 0.5 / 8
    assert all(r.ok for r in s.evidence) and s.stable


def test_near_pole_gain_grows_as_plateau_shrinks():
    pr = BarrierParams(1, 1.0, 1.0, 1.0, 0.5, select_p(1, 1.0, 1.0))
    radii = [0.5, 0.7, 0.9]
    a = _evidence(Power(1.0), pr, 1 / 32, radii, 1e-6, 0, False)
    b = _evidence(Power(1.0), pr, 1 / 64, radii, 1e-6, 0, False)
    for ra, rb in zip(a, b):
        assert rb.I1 > ra.I1 > 0
        assert math.isclose(ra.I1 + ra.I2plusI3, ra.Mminus, rel_tol=1e-12, abs_tol=1e-12)
