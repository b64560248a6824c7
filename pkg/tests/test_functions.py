import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from varorder.functions import (
    BUILTINS,
    affine,
    bump,
    cos_x1,
    local_derivative_bounds,
    power_decay,
    power_derivative_bounds,
    quadratic_cap,
    w_R,
)

coords = st.floats(-2.5, 2.5)


def fd_hessian(u, x, h=1e-4):
    n = x.size
    H = np.zeros((n, n))
    E = np.eye(n) * h
    for i in range(n):
        for j in range(n):
            H[i, j] = (
                u(x + E[i] + E[j]) - u(x + E[i] - E[j]) - u(x - E[i] + E[j]) + u(x - E[i] - E[j])
            ) / (4 * h * h)
    return H


def fd_gradient(u, x, h=1e-6):
    E = np.eye(x.size) * h
    return np.array([(u(x + e) - u(x - e)) / (2 * h) for e in E])


def _functions(n):
    return [cos_x1(n), bump(n), quadratic_cap(n, 1.3), w_R(n, 0.7), power_decay(n, 3.5, 0.2)]


@given(st.integers(1, 3), st.lists(coords, min_size=3, max_size=3), st.integers(0, 4))
def test_hessian_and_gradient_against_finite_differences(n, xs, which):
    u = _functions(n)[which]
    x = np.array(xs[:n])
    assume(u.kink_distance(x) > 1e-2)
    assume(np.linalg.norm(x) > 1e-2)
    H = u.hessian(x)
    scale = 1.0 + np.abs(H).max()
    assert np.allclose(H, fd_hessian(u, x), atol=1e-5 * scale * max(1.0, float(u(x))), rtol=1e-5)
    g = u.gradient(x)
    assert np.allclose(g, fd_gradient(u, x), atol=1e-7 * (1 + np.abs(g).max()), rtol=1e-6)


def test_builtin_values():
    assert float(bump(2)(np.array([0.0, 0.0]))) == 1.0
    assert float(bump(2)(np.array([1.2, 0.0]))) == 0.0
    assert float(quadratic_cap(1, 1.0)(np.array([3.0]))) == 1.0
    assert float(w_R(1, 4.0)(np.array([4.0]))) == pytest.approx(0.25)
    assert float(power_decay(1, 2.0, 0.5)(np.array([0.1]))) == pytest.approx(4.0)
    assert set(BUILTINS) == {"cos", "bump", "quadratic-cap", "w_R"}


@pytest.mark.parametrize("k", [3, 4])
def test_bump_derivative_constants(k):
    # sup of the k-th directional derivative of (1 - |x|^2)^4 over random lines
    rng = np.random.default_rng(3)
    bound = {3: 336.0, 4: 1680.0}[k]
    worst = 0.0
    for _ in range(200):
        x = rng.uniform(-1, 1, 3)
        if np.linalg.norm(x) >= 1:
            continue
        e = rng.normal(size=3)
        e /= np.linalg.norm(e)
        f = lambda t: (1 - sum((x[i] + t * e[i]) ** 2 for i in range(3))) ** 4  # noqa: E731
        worst = max(worst, abs(float(mpmath.diff(f, 0, k))))
    assert worst <= bound


@given(st.floats(1.5, 6.0), st.floats(0.2, 5.0), st.floats(0, 2 * math.pi), st.floats(0, math.pi))
def test_power_derivative_bounds_hold(p, s, a, b):
    x = s * np.array([1.0, 0.0, 0.0])
    e = np.array([math.cos(a) * math.sin(b), math.sin(a) * math.sin(b), math.cos(b)])
    f = lambda t: sum((x[i] + t * e[i]) ** 2 for i in range(3)) ** (-p / 2)  # noqa: E731
    c3, c4 = power_derivative_bounds(p, s)
    assert abs(float(mpmath.diff(f, 0, 3))) <= c3 * (1 + 1e-10)
    assert abs(float(mpmath.diff(f, 0, 4))) <= c4 * (1 + 1e-10)


def test_power_decay_local_bounds():
    u = power_decay(2, 3.0, 0.1)
    assert local_derivative_bounds(u, [0.15, 0.0], 0.1) == (math.inf, math.inf)
    assert local_derivative_bounds(u, [1.0, 0.0], 0.5) == power_derivative_bounds(3.0, 0.5)
    assert local_derivative_bounds(bump(2), [0.0, 0.0], 0.1) == (336.0, 1680.0)


def test_affine_inside_and_outside():
    u = affine(2, [1.0, -2.0], 0.5, radius=3.0)
    assert float(u(np.array([1.0, 1.0]))) == pytest.approx(-0.5)
    assert float(u(np.array([3.0, 1.0]))) == 0.0
    assert u.far_radius == 3.0
    assert np.all(u.hessian(np.zeros(2)) == 0)


def test_algebra():
    u = bump(2)
    x = np.array([0.3, 0.1])
    assert float((-u)(x)) == pytest.approx(-float(u(x)))
    v = u + quadratic_cap(2)
    assert float(v(x)) == pytest.approx(float(u(x)) + 0.1)
    assert np.allclose(v.hessian(x), u.hessian(x) + quadratic_cap(2).hessian(x))
    assert u.scaled(2.0).c4 == 2 * u.c4
    with pytest.raises(ValueError):
        u + bump(1)
