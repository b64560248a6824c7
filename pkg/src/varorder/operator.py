"""Classical pointwise evaluation of the linear and extremal nonlocal operators.

All three operators share one integral,

    I(u, x; w+, w-) = int W(delta(u, x, y)) / (|y|^n phi(|y|)) dy,
    W(d) = w+ d^+ - w- d^-,

so that the linear operator is ``C/2 * I(1, 1)``, the maximal operator is
``C * I(Lambda, lambda)`` and the minimal one is ``C * I(lambda, Lambda)``.

The integral is split into

* a small ball ``|y| < eps`` replaced by its quadratic Taylor term, with the
  remainder bounded through third or fourth derivative bounds (``W`` is
  Lipschitz, so the bound survives the sign split);
* the body ``eps <= |y| <= R_t`` in polar coordinates centred at the
  origin, with angular panels broken where ``x + y`` or ``x - y`` crosses a
  kink of ``u``;
* a tail ``|y| > R_t`` closed exactly when ``u`` is constant far away, by an
  accelerated block series for single-harmonic axial profiles, or bounded
  by the sup norm otherwise;
* for radial functions with a tall plateau at the origin, a neighbourhood
  of the pole ``y = -x`` integrated in coordinates centred at the pole.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quad import EPS, averaged_partial_sums, dyadic_edges, fixed_panels, gauss_legendre, integrate, merge_edges
from .errors import ToleranceError
from .functions import PointFunction, local_derivative_bounds
from .kernel import ScalingFunction, lower_moment, upper_moment
from .normalizer import NormalizationResult, cached_cphi, sphere_area

DEFAULT_TOL = 1e-6
_NOISE = 1e-14
_MOMENT_TOL = 1e-12


@dataclass(frozen=True)
class ExtremalParams:
    """Ellipticity bounds ``0 < lam <= Lam``."""

    lam: float
    Lam: float

    def __post_init__(self):
        if not (0 < self.lam <= self.Lam < math.inf):
            raise ValueError("need 0 < lambda <= Lambda < inf")


@dataclass(frozen=True)
class OperatorValue:
    """Operator value with enclosure half-width and its additive breakdown.

    ``inner + annulus + tail + pole == value``.  ``pole`` is nonzero only
    when the pole-centred split was used.
    """

    value: float
    error: float
    inner: float
    annulus: float
    tail: float
    pole: float = 0.0
    eps: float = math.nan

    @property
    def lo(self) -> float:
        return self.value - self.error

    @property
    def hi(self) -> float:
        return self.value + self.error

    def scaled(self, f: float, extra_error: float = 0.0) -> "OperatorValue":
        return OperatorValue(
            f * self.value,
            abs(f) * self.error + extra_error,
            f * self.inner,
            f * self.annulus,
            f * self.tail,
            f * self.pole,
            self.eps,
        )


def second_difference(u: PointFunction, x, y) -> np.ndarray:
    """``u(x + y) + u(x - y) - 2 u(x)`` for one point and any stack of offsets."""
    x = np.asarray(x, dtype=float).reshape(u.n)
    y = np.asarray(y, dtype=float)
    return u(x + y) + u(x - y) - 2.0 * u(x)


def tail_bound(u_sup: float, phi: ScalingFunction, n: int, R: float) -> float:
    """``4 |S^(n-1)| u_sup upper(R)``, a bound on the part of ``I(1, 1)``
    outside the ball of radius ``R`` (``|S^0| = 2``)."""
    if u_sup == 0:
        return 0.0
    m = upper_moment(phi, R, _MOMENT_TOL)
    return 4.0 * sphere_area(n) * u_sup * m.hi


# ---------------------------------------------------------------- sign weights


@dataclass(frozen=True)
class _Weight:
    wp: float
    wn: float

    @property
    def wmax(self) -> float:
        return max(self.wp, self.wn)

    def __call__(self, d):
        return np.where(d >= 0, self.wp * d, self.wn * d)


def _smoothstep_cut(s, r):
    """1 on ``[0, r/2]``, 0 beyond ``r``, quintic blend between (C^2)."""
    t = np.clip((np.asarray(s, dtype=float) - 0.5 * r) / (0.5 * r), 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


# ---------------------------------------------------------------- Taylor ball


def _pair_average(A: float, B: float, n: int, W: _Weight) -> float:
    """``int_S W(A theta_1^2 + B |theta'|^2) dsigma``."""
    if n == 1:
        return 2.0 * float(W(np.array(A)))
    x, w = gauss_legendre(32)
    edges = [0.0, 0.5 * math.pi]
    if A * B < 0:
        edges.insert(1, math.atan(math.sqrt(-A / B)))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        beta = 0.5 * (a + b) + 0.5 * (b - a) * x
        q = A * np.cos(beta) ** 2 + B * np.sin(beta) ** 2
        total += 0.5 * (b - a) * float((W(q) * np.sin(beta) ** (n - 2) * w).sum())
    return 2.0 * sphere_area(n - 1) * total


def _quadratic_average(H: np.ndarray, n: int, W: _Weight) -> float:
    """``int_S W(theta^T H theta) dsigma`` for a symmetric matrix ``H``."""
    lam = np.linalg.eigvalsh(0.5 * (H + H.T))
    if n == 1:
        return 2.0 * float(W(np.array(lam[0])))
    if W.wp == W.wn or lam.min() >= 0 or lam.max() <= 0:
        w = W.wp if lam.sum() >= 0 else W.wn
        return w * float(lam.sum()) * sphere_area(n) / n
    if n == 2:
        return _pair_average(lam[0], lam[1], 2, W)
    distinct = np.unique(np.round(lam / np.abs(lam).max(), 13))
    if distinct.size <= 2:
        # two eigenvalues: the one with multiplicity 1 plays the axis
        lo_count = int(np.sum(np.isclose(lam, lam[0], rtol=1e-12, atol=0)))
        A, B = (lam[-1], lam[0]) if lo_count > 1 else (lam[0], lam[-1])
        return _pair_average(A, B, n, W)
    if n == 3:
        x, w = gauss_legendre(48)
        psi = 0.25 * math.pi * (1 + x)
        vals = [_pair_average(lam[0], lam[1] * math.cos(p) ** 2 + lam[2] * math.sin(p) ** 2, 3, W) for p in psi]
        return float(np.dot(vals, w)) * 0.25 * math.pi * 2.0 / math.pi
    raise NotImplementedError("sign-split Taylor term needs n <= 3 or at most two distinct curvatures")


# ---------------------------------------------------------------- angular quadrature


def _with_sign_changes(fd, rho, edges, per: int = 4, iters: int = 40) -> np.ndarray:
    """Add the zeros of ``fd(rho, beta)`` to per-row breakpoints.

    The weight ``W`` has a corner where the second difference changes
    sign; putting that point on a panel edge restores the convergence
    rate of the Gauss rules.  Zeros are bracketed on a sample grid
    (``per`` points per existing panel) and refined by bisection.
    """
    N, K = edges.shape
    f = np.linspace(0.0, 1.0, per + 1)[:-1]
    grid = (edges[:, :-1, None] + (edges[:, 1:] - edges[:, :-1])[:, :, None] * f).reshape(N, -1)
    grid = np.concatenate([grid, edges[:, -1:]], axis=1)
    r = rho[:, None]
    d = fd(r, grid)
    sd = np.sign(d)
    change = (sd[:, :-1] * sd[:, 1:]) < 0
    if not change.any():
        return edges
    row, col = np.nonzero(change)
    a, b = grid[row, col], grid[row, col + 1]
    da = sd[row, col]
    rr = rho[row]
    for _ in range(iters):
        m = 0.5 * (a + b)
        sm = np.sign(fd(rr, m))
        left = sm == da
        a = np.where(left, m, a)
        b = np.where(left, b, m)
    roots = np.full(change.shape, np.nan)
    roots[row, col] = 0.5 * (a + b)
    count = int(change.sum(axis=1).max())
    extra = np.sort(np.where(np.isnan(roots), np.inf, roots), axis=1)[:, :count]
    extra = np.where(np.isinf(extra), edges[:, :1], extra)
    return np.sort(np.concatenate([edges, extra], axis=1), axis=1)


class _Sphere:
    """Sphere integrals ``int_S W(delta(u, x, rho theta)) w(theta) dsigma``.

    Each call returns, per radius, the 16-point value, the 8-point value and
    an evaluation-noise bound, all on the same panels.
    """

    def __init__(self, u: PointFunction, x: np.ndarray, W: _Weight, split: dict | None, sub: int):
        # quarter-period breakpoints already make the panels short
        if u.symmetry == "axial" and u.period is not None:
            sub = max(1, sub // 2)
        self.u, self.x, self.W, self.split, self.sub = u, x, W, split, sub
        self.n = u.n
        self.ux = float(u(x))
        if u.symmetry == "radial":
            self.R0 = float(np.linalg.norm(x))
        elif u.symmetry == "axial":
            self.x1 = float(x[0])
        if split is not None:
            self.kinks = (0.5 * split["rp"], split["rp"]) + tuple(k for k in u.kinks if k > split["rp"])
        else:
            self.kinks = tuple(u.kinks)

    # --- pointwise second difference and its noise
    def _delta(self, up, um):
        ux = self.ux
        d = up + um - 2.0 * ux
        mag = np.abs(up) + np.abs(um) + 2.0 * abs(ux)
        band = np.abs(d) < _NOISE * mag
        val = np.where(band, 0.0, self.W(d))
        noise = self.W.wmax * (np.where(band, _NOISE * mag, 0.0) + 4.0 * EPS * mag)
        return val, noise

    def _radial_points(self, rho, beta):
        R0 = self.R0
        base = (R0 - rho) ** 2
        sp = np.sqrt(base + 4.0 * R0 * rho * np.cos(0.5 * beta) ** 2)
        sm = np.sqrt(base + 4.0 * R0 * rho * np.sin(0.5 * beta) ** 2)
        return sp, sm

    def _radial_delta(self, rho, beta):
        U = self.u.profile
        sp, sm = self._radial_points(rho, beta)
        val, noise = self._delta(U(sp), U(sm))
        if self.split is not None:
            rp = self.split["rp"]
            keep = 1.0 - _smoothstep_cut(sp, rp) - _smoothstep_cut(sm, rp)
            val, noise = val * keep, noise * keep
        return val, noise

    def _axial_delta(self, rho, beta):
        U, x1 = self.u.profile, self.x1
        c = rho * np.cos(beta)
        return self._delta(U(x1 + c), U(x1 - c))

    def _plain_delta(self, rho, beta):
        U = self.u.profile
        if self.u.symmetry == "radial":
            sp, sm = self._radial_points(rho, beta)
            return U(sp) + U(sm) - 2.0 * self.ux
        c = rho * np.cos(beta)
        return U(self.x1 + c) + U(self.x1 - c) - 2.0 * self.ux

    def _beta_edges(self, rho):
        """Per-radius angular breakpoints on ``[0, pi/2]``, shape (N, K)."""
        cols = [np.zeros_like(rho), np.full_like(rho, 0.5 * math.pi)]
        if self.u.symmetry == "radial":
            R0 = self.R0
            for s in self.kinks:
                c = (s * s - R0 * R0 - rho * rho) / (2.0 * R0 * rho)
                cols.append(np.arccos(np.minimum(np.abs(c), 1.0)))
        else:
            for k in self.kinks:
                cols.append(np.arccos(np.minimum(abs(k - self.x1) / rho, 1.0)))
            P = self.u.period
            if P is not None:
                q = 0.25 * P
                jmax = int(math.ceil(float(rho.max()) / q))
                for j in range(1, jmax + 1):
                    cols.append(np.arccos(np.minimum(j * q / rho, 1.0)))
        return np.sort(np.stack(cols, axis=1), axis=1)

    def __call__(self, rho) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rho = np.asarray(rho, dtype=float)
        u = self.u
        if self.n == 1:
            if u.symmetry == "none":
                y = rho[:, None]
                val, noise = self._delta(u(self.x + y), u(self.x - y))
            elif u.symmetry == "axial":
                val, noise = self._axial_delta(rho, np.zeros_like(rho))
            else:
                val, noise = self._radial_delta(rho, np.zeros_like(rho))
            return 2.0 * val, 2.0 * val, 2.0 * noise
        if u.symmetry == "none":
            return self._general(rho)
        if u.symmetry == "radial" and self.R0 == 0.0:
            d = 2.0 * u.profile(rho) - 2.0 * self.ux
            mag = 2.0 * np.abs(u.profile(rho)) + 2.0 * abs(self.ux)
            val = self.W(d)
            S = sphere_area(self.n)
            noise = self.W.wmax * 4.0 * EPS * mag
            return S * val, S * val, S * noise
        edges = self._beta_edges(rho)
        if self.W.wp != self.W.wn:
            edges = _with_sign_changes(self._plain_delta, rho, edges)
        f = np.linspace(0.0, 1.0, self.sub + 1)
        a = edges[:, :-1, None] + (edges[:, 1:] - edges[:, :-1])[:, :, None] * f[:-1]
        b = edges[:, :-1, None] + (edges[:, 1:] - edges[:, :-1])[:, :, None] * f[1:]
        a = a.reshape(rho.size, -1)
        b = b.reshape(rho.size, -1)
        out = []
        for m in (16, 8):
            xg, wg = gauss_legendre(m)
            half = 0.5 * (b - a)
            beta = (0.5 * (a + b))[..., None] + half[..., None] * xg
            r = rho[:, None, None]
            if u.symmetry == "radial":
                val, noise = self._radial_delta(r, beta)
            else:
                val, noise = self._axial_delta(r, beta)
            jac = np.sin(beta) ** (self.n - 2) * (half[..., None] * wg)
            out.append(((val * jac).sum(axis=(1, 2)), (noise * jac).sum(axis=(1, 2))))
        c = 2.0 * sphere_area(self.n - 1)
        return c * out[0][0], c * out[1][0], c * out[0][1]

    def _general(self, rho):
        # no symmetry: fixed tensor rules over half the sphere, chunked in rho
        n = self.n
        if n > 3:
            raise NotImplementedError("functions without symmetry are supported for n <= 3")
        res = [np.empty(rho.size) for _ in range(3)]
        for lo in range(0, rho.size, 128):
            r = rho[lo : lo + 128]
            vals = []
            for m in (16, 8):
                xg, wg = gauss_legendre(m)
                if n == 2:
                    e = np.linspace(0.0, math.pi, 8 * self.sub + 1)
                    h = 0.5 * np.diff(e)
                    psi = ((0.5 * (e[:-1] + e[1:]))[:, None] + h[:, None] * xg).ravel()
                    w = (h[:, None] * wg).ravel()
                    dirs = np.stack([np.cos(psi), np.sin(psi)], axis=1)
                else:
                    eb = np.linspace(0.0, 0.5 * math.pi, 4 * self.sub + 1)
                    hb = 0.5 * np.diff(eb)
                    beta = ((0.5 * (eb[:-1] + eb[1:]))[:, None] + hb[:, None] * xg).ravel()
                    wb = (hb[:, None] * wg).ravel() * np.sin(beta)
                    ep = np.linspace(0.0, 2 * math.pi, 8 * self.sub + 1)
                    hp = 0.5 * np.diff(ep)
                    psi = ((0.5 * (ep[:-1] + ep[1:]))[:, None] + hp[:, None] * xg).ravel()
                    wp = (hp[:, None] * wg).ravel()
                    B, P = np.meshgrid(beta, psi, indexing="ij")
                    dirs = np.stack([np.cos(B), np.sin(B) * np.cos(P), np.sin(B) * np.sin(P)], axis=-1).reshape(-1, 3)
                    w = np.outer(wb, wp).ravel()
                y = r[:, None, None] * dirs[None]
                val, noise = self._delta(self.u(self.x + y), self.u(self.x - y))
                vals.append((2.0 * (val * w).sum(-1), 2.0 * (noise * w).sum(-1)))
            res[0][lo : lo + 128] = vals[0][0]
            res[1][lo : lo + 128] = vals[1][0]
            res[2][lo : lo + 128] = vals[0][1]
        return res[0], res[1], res[2]


# ---------------------------------------------------------------- raw integral


@dataclass(frozen=True)
class _Raw:
    inner: float
    inner_err: float
    body: float
    body_err: float
    tail: float
    tail_err: float
    pole: float = 0.0
    pole_err: float = 0.0

    @property
    def value(self) -> float:
        return self.inner + self.body + self.tail + self.pole

    @property
    def error(self) -> float:
        return self.inner_err + self.body_err + self.tail_err + self.pole_err


def _as_point(u: PointFunction, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (u.n,):
        raise ValueError(f"point must have {u.n} coordinates")
    return x


def _pole_split(u: PointFunction, x: np.ndarray) -> dict | None:
    if u.symmetry != "radial" or u.peak is None:
        return None
    R0 = float(np.linalg.norm(x))
    if R0 < 4.0 * u.peak:
        return None
    return {"R0": R0, "rp": 0.5 * R0}


def _reference(u, x, phi, n, W) -> float:
    # natural size of I at x: curvature times the lower moment plus the
    # local value times the upper moment, both at the kink distance
    H = u.hessian(x)
    ell = u.kink_distance(x)
    ell = u.scale if not math.isfinite(ell) else max(min(ell, 1e6 * u.scale), 1e-6 * u.scale)
    mag = max(abs(float(u(x))), abs(u.far_value))
    if u.sup < math.inf and u.peak is None:
        mag = max(mag, u.sup)
    ref = W.wmax * sphere_area(n) * (
        float(np.abs(H).max()) * lower_moment(phi, ell, 1e-8).value + 4.0 * mag * upper_moment(phi, ell, 1e-8).value
    )
    return ref if ref > 0 else 1.0


def _tail(u, x, phi, n, W, sphere, target, sub):
    """Start ``R_t`` of the tail and its value and error."""
    S = sphere_area(n)
    ux = float(u(x))
    R0 = float(np.linalg.norm(x))
    c = 2.0 * u.far_value - 2.0 * ux
    if u.symmetry == "radial" and u.far_radius is not None:
        Rt = R0 + u.far_radius
        m = upper_moment(phi, Rt, _MOMENT_TOL)
        wc = float(W(np.array(c)))
        return Rt, wc * S * m.value, abs(wc) * S * m.error + 4 * EPS * abs(wc) * S * m.value, None
    if u.symmetry == "radial" and u.envelope is not None:
        Rt = max(2.0 * (R0 + u.scale), 4.0 * R0)
        for _ in range(80):
            m = upper_moment(phi, Rt, _MOMENT_TOL)
            err = W.wmax * 2.0 * u.envelope(Rt - R0) * S * m.hi
            if err <= target:
                break
            Rt *= 2.0
        wc = float(W(np.array(c)))
        return Rt, wc * S * m.value, err + abs(wc) * S * m.error, None
    if u.symmetry == "axial" and u.period is not None:
        out = _periodic_tail(u, x, phi, n, W, sphere, sub)
        if out is not None:
            return out
    # no structure: bound by the sup norm
    if not math.isfinite(u.sup):
        raise ToleranceError("unbounded function without far-field structure", math.inf, target)
    Rt = max(u.scale, 1.0) * 16.0
    if u.far_radius is not None:
        Rt = max(u.far_radius - R0, 0.0)
        if Rt <= 0:
            raise ValueError("evaluation point outside the region where the function is described")
        return Rt, 0.0, W.wmax * tail_bound(u.sup, phi, n, Rt), None
    for _ in range(80):
        err = W.wmax * tail_bound(u.sup, phi, n, Rt)
        if err <= target:
            break
        Rt *= 4.0
    return Rt, 0.0, err, None


def _periodic_tail(u, x, phi, n, W, sphere, sub):
    # single-harmonic profile: U(s) + U(s + P/2) = 2 * mean
    P = u.period
    x1 = float(x[0])
    mean = 0.5 * float(u.profile(x1) + u.profile(x1 + 0.5 * P))
    s = np.linspace(0.0, P, 257)
    D = u.profile(x1 + s) + u.profile(x1 - s) - 2.0 * u.profile(x1)
    amp = np.abs(D).max()
    if D.min() < -1e-12 * amp and D.max() > 1e-12 * amp:
        return None
    Rt = 6.0 * P
    nblocks = 24
    S = sphere_area(n)
    dinf = 2.0 * mean - 2.0 * float(u.profile(x1))
    Ginf = float(W(np.array(dinf))) * S
    edges = Rt + 0.25 * P * np.arange(2 * nblocks + 1)

    def f(r):
        flat = r.ravel()
        g16, g8, noise = sphere(flat)
        pr = flat * phi(flat)
        return np.stack([(g16 - Ginf) / pr, np.abs(g16 - g8) / pr, noise / pr]).reshape((3,) + r.shape)

    vh, ve = fixed_panels(f, edges)
    blocks = vh[0].reshape(nblocks, 2).sum(-1)
    osc, acc_err = averaged_partial_sums(blocks)
    m = upper_moment(phi, Rt, _MOMENT_TOL)
    err = acc_err + float(ve[0].sum()) + float(vh[1].sum()) + float(vh[2].sum()) + abs(Ginf) * m.error
    return Rt, Ginf * m.value + osc, err, edges


def _body_edges(u, x, eps, Rt, split):
    R0 = float(np.linalg.norm(x))
    e = [dyadic_edges(eps, Rt)]
    if u.symmetry == "radial":
        ks = (0.5 * split["rp"], split["rp"]) if split else u.kinks
        for s in ks:
            e.append([abs(s - R0), s + R0])
    elif u.symmetry == "axial":
        e.append([abs(k - float(x[0])) for k in u.kinks])
        if u.period is not None:
            q = 0.25 * u.period
            e.append(q * np.arange(1, int(Rt / q) + 1))
    e = merge_edges(*e)
    return e[(e >= eps) & (e <= Rt)]


def _pole_part(u, x, phi, n, W, split, sub, atol):
    """Twice the integral over ``|x + y| < rp`` in pole-centred polar
    coordinates, weighted by the cutoff."""
    R0, rp = split["R0"], split["rp"]
    U = u.profile
    ux = float(u(x))
    peak = u.peak

    def geometry(r, beta):
        sin2 = np.sin(0.5 * beta) ** 2
        y = np.sqrt((R0 - r) ** 2 + 4.0 * R0 * r * sin2)
        far = np.sqrt((2.0 * R0 - r) ** 2 + 8.0 * R0 * r * sin2)
        return y, far

    def plain(r, beta):
        return U(r) + U(geometry(r, beta)[1]) - 2.0 * ux

    def pieces(r, beta):
        y, far = geometry(r, beta)
        up, um = U(r) * np.ones_like(beta), U(far)
        d = up + um - 2.0 * ux
        mag = np.abs(up) + np.abs(um) + 2.0 * abs(ux)
        band = np.abs(d) < _NOISE * mag
        val = np.where(band, 0.0, W(d))
        noise = W.wmax * (np.where(band, _NOISE * mag, 0.0) + 4.0 * EPS * mag)
        k = _smoothstep_cut(r, rp) * r ** (n - 1) / (y**n * phi(y))
        return val * k, noise * k

    def inner(rz):
        flat = rz.ravel()
        r = flat[:, None]
        if n == 1:
            beta = np.array([0.0, math.pi])
            val, noise = pieces(r, beta)
            v = val.sum(-1)
            return np.stack([v, np.zeros_like(v), noise.sum(-1)]).reshape((3,) + rz.shape)
        edges = np.broadcast_to(np.linspace(0.0, math.pi, 4 * sub + 1), (flat.size, 4 * sub + 1))
        if W.wp != W.wn:
            edges = _with_sign_changes(plain, flat, edges)
        a, b = edges[:, :-1], edges[:, 1:]
        outs = []
        for m in (16, 8):
            xg, wg = gauss_legendre(m)
            half = 0.5 * (b - a)
            beta = (0.5 * (a + b))[..., None] + half[..., None] * xg
            val, noise = pieces(r[..., None], beta)
            jac = sphere_area(n - 1) * np.sin(beta) ** (n - 2) * half[..., None] * wg
            outs.append(((val * jac).sum(axis=(1, 2)), (noise * jac).sum(axis=(1, 2))))
        v16, n16 = outs[0]
        v8 = outs[1][0]
        return np.stack([v16, np.abs(v16 - v8), n16]).reshape((3,) + rz.shape)

    edges = merge_edges([0.0, peak], dyadic_edges(peak, 0.5 * rp), [rp])
    q = integrate(inner, edges, rtol=1e-11, atol=atol)
    return 2.0 * q.value[0], 2.0 * (q.error[0] + q.value[1] + q.value[2])


def _taylor_residual(u, x, n, W, eps, lower_hi) -> float:
    # |delta - y^T H y| <= min(c3 |y|^3 / 3, c4 |y|^4 / 12) and W is wmax-Lipschitz
    c3, c4 = local_derivative_bounds(u, x, eps)
    return W.wmax * sphere_area(n) * min(c3 * eps * lower_hi / 3.0, c4 * eps * eps * lower_hi / 12.0)


def _raw_integral(u, x, phi, n, W, eps, target, refine=0) -> _Raw:
    sub = 2 * 2**refine
    split = _pole_split(u, x)
    sphere = _Sphere(u, x, W, split, sub)
    # Taylor ball
    H = u.hessian(x)
    A = _quadratic_average(H, n, W)
    lm = lower_moment(phi, eps, _MOMENT_TOL)
    resid = _taylor_residual(u, x, n, W, eps, lm.hi)
    inner = A * lm.value
    inner_err = abs(A) * lm.error + resid + 8 * EPS * abs(inner)
    # tail
    Rt, tail, tail_err, _ = _tail(u, x, phi, n, W, sphere, 0.01 * target, sub)
    # body in t = log(rho)
    edges = _body_edges(u, x, eps, Rt, split)

    def body(t):
        rho = np.exp(t).ravel()
        g16, g8, noise = sphere(rho)
        p = phi(rho)
        return np.stack([g16 / p, np.abs(g16 - g8) / p, noise / p]).reshape((3,) + t.shape)

    q = integrate(body, np.log(edges), rtol=1e-11, atol=1e-4 * target)
    b_val = float(q.value[0])
    b_err = float(q.error[0] + q.value[1] + q.value[2])
    pole = pole_err = 0.0
    if split is not None:
        pole, pole_err = _pole_part(u, x, phi, n, W, split, sub, 1e-4 * target)
    return _Raw(inner, inner_err, b_val, b_err, tail, tail_err, pole, pole_err)


def _default_eps(u: PointFunction, x) -> float:
    eps = min(1e-3 * u.scale, 0.25 * u.kink_distance(x))
    split = _pole_split(u, x)
    if split is not None:
        eps = min(eps, 0.25 * split["rp"])
    if u.period is not None:
        eps = min(eps, 1e-3 * u.period)
    if not eps > 0:
        raise ValueError("the function is not smooth at the evaluation point")
    return eps


def evaluate(
    u: PointFunction,
    x,
    phi: ScalingFunction,
    weights: tuple[float, float],
    factor: float,
    tol: float = DEFAULT_TOL,
    eps: float | None = None,
    sweep: bool = True,
    refine: int = 0,
    cphi: NormalizationResult | None = None,
) -> OperatorValue:
    """``factor * C_phi * I(u, x; w+, w-)`` with a convergence check in ``eps``.

    Parameters
    ----------
    weights : (float, float)
        Weights of the positive and negative parts of the second difference.
    factor : float
        1/2 for the linear operator, 1 for the extremal ones.
    tol : float
        Accepted error relative to ``max(|value|, natural size)``, where the
        natural size combines the curvature of ``u`` at ``x`` with the local
        kernel moments.
    eps : float, optional
        Radius of the Taylor ball; defaults to ``1e-3`` of the function's
        length scale, capped by the distance to its kinks.
    sweep : bool
        Recompute with ``eps / 4`` and require agreement.
    refine : int
        Doubles the angular panel count per level.
    """
    n = u.n
    x = _as_point(u, x)
    W = _Weight(*weights)
    C = cphi if cphi is not None else cached_cphi(phi, n)
    ref = _reference(u, x, phi, n, W)
    target = tol * ref
    if eps is None:
        eps = _default_eps(u, x)
        # shrink the Taylor ball until its remainder is a small share of the budget
        for _ in range(12):
            if _taylor_residual(u, x, n, W, eps, lower_moment(phi, eps, _MOMENT_TOL).hi) <= 0.05 * target:
                break
            eps *= 0.25
    eps = float(eps)
    raw = _raw_integral(u, x, phi, n, W, eps, target, refine)
    if sweep:
        raw2 = _raw_integral(u, x, phi, n, W, 0.25 * eps, target, refine)
        gap = abs(raw.value - raw2.value)
        if gap > raw.error + raw2.error + target:
            raise ToleranceError(
                f"inner radius sweep disagrees at x={x.tolist()}", achieved=gap / ref, requested=tol
            )
    f = factor * C.value
    err = abs(f) * raw.error + factor * C.error * abs(raw.value)
    annulus = raw.body
    out = OperatorValue(
        float(f * raw.value), float(err), float(f * raw.inner), float(f * annulus), float(f * raw.tail), float(f * raw.pole), eps
    )
    if out.error > tol * max(abs(out.value), abs(f) * ref):
        raise ToleranceError(f"operator enclosure at x={x.tolist()}", achieved=out.error / (abs(f) * ref), requested=tol)
    return out


def linear_apply(u: PointFunction, x, phi: ScalingFunction, tol: float = DEFAULT_TOL, **kw) -> OperatorValue:
    """``(1/2) C_phi int delta(u, x, y) / (|y|^n phi(|y|)) dy``."""
    return evaluate(u, x, phi, (1.0, 1.0), 0.5, tol, **kw)


def pucci_plus(u: PointFunction, x, phi: ScalingFunction, params: ExtremalParams, tol: float = DEFAULT_TOL, **kw) -> OperatorValue:
    """``C_phi int (Lam delta^+ - lam delta^-) / (|y|^n phi(|y|)) dy``.

    Carries ``C_phi``, not ``C_phi / 2``: with ``lam = Lam = 1`` it equals
    twice :func:`linear_apply`.
    """
    return evaluate(u, x, phi, (params.Lam, params.lam), 1.0, tol, **kw)


def pucci_minus(u: PointFunction, x, phi: ScalingFunction, params: ExtremalParams, tol: float = DEFAULT_TOL, **kw) -> OperatorValue:
    """``C_phi int (lam delta^+ - Lam delta^-) / (|y|^n phi(|y|)) dy``."""
    return evaluate(u, x, phi, (params.lam, params.Lam), 1.0, tol, **kw)


# ---------------------------------------------------------------- comparison function


@dataclass(frozen=True)
class GapReport:
    """Lower bound ``gap`` on the minimal operator applied to ``w_R`` and the
    quadrature values at the sampled points."""

    R: float
    gap: float
    points: np.ndarray
    values: np.ndarray
    errors: np.ndarray

    @property
    def worst(self) -> int:
        return int(np.argmin(self.values - self.errors - self.gap))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.values + self.errors >= self.gap))


def w_R_gap_value(phi: ScalingFunction, n: int, lam: float, R: float, cphi: float | None = None) -> float:
    """``C_phi lam |S^(n-1)| lower(R) / (2 R^2)``."""
    C = cphi if cphi is not None else cached_cphi(phi, n).value
    return C * lam * sphere_area(n) * lower_moment(phi, R, _MOMENT_TOL).value / (2.0 * R * R)


def w_R_subsolution_gap(
    phi: ScalingFunction,
    n: int,
    lam: float,
    R: float = 4.0,
    Lam: float | None = None,
    samples: int = 9,
    tol: float = DEFAULT_TOL,
) -> GapReport:
    """Check ``M^- w_R >= gap`` on radial samples of ``B_R``.

    ``w_R = min(1, |x|^2 / (4 R^2))`` is radial, so sampling ``x = r e_1``
    with ``0 <= r < R`` covers the ball.

    Raises
    ------
    ValueError
        If ``R < 4``.
    """
    from .functions import w_R

    if R < 4:
        raise ValueError("the comparison function is used for R >= 4")
    params = ExtremalParams(lam, Lam if Lam is not None else lam)
    u = w_R(n, R)
    gap = w_R_gap_value(phi, n, lam, R)
    radii = R * np.linspace(0.0, 1.0, samples, endpoint=False)
    pts = np.zeros((samples, n))
    pts[:, 0] = radii
    vals, errs = [], []
    for p in pts:
        v = pucci_minus(u, p, phi, params, tol)
        vals.append(v.value)
        errs.append(v.error)
    return GapReport(R, gap, pts, np.array(vals), np.array(errs))
