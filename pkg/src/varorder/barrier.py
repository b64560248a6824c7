"""Radial barrier functions and the search for their plateau radius.

``Phi_1(x) = min((kappa0 R)^-p, |x|^-p)`` is a subsolution of the minimal
operator on the annulus ``kappa1 R <= |x| < R`` once its plateau is small
enough.  The capped barrier glues a paraboloid inside the plateau to a
shifted copy of ``Phi_1`` so that it is ``C^{1,1}``, at least 2 on
``B_{3R/4}`` and zero outside ``B_R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functions import PointFunction, power_decay
from .kernel import ScalingFunction, WeakScalingCertificate
from .normalizer import sphere_area
from .operator import DEFAULT_TOL, ExtremalParams, pucci_minus

P_OFFSET = 1e-9


def rho0(n: int) -> float:
    """``2^-8 / n``, the small ratio used for the ring radii."""
    return 2.0**-8 / n


def select_p(n: int, lam: float, Lam: float) -> float:
    """Smallest exponent with ``p > n + 1`` and
    ``(p + 2) (lam / 2) |S| / n >= Lam |S|``."""
    if not 0 < lam <= Lam:
        raise ValueError("need 0 < lambda <= Lambda")
    return max(n + 1 + P_OFFSET, 2.0 * n * Lam / lam - 2.0)


def sphere_margin(n: int, lam: float, Lam: float, p: float) -> float:
    """``(p + 2) (lam / 2) c_n - Lam |S|`` with ``c_n = |S| / n``."""
    S = sphere_area(n)
    return (p + 2.0) * 0.5 * lam * S / n - Lam * S


def p_constraints_hold(n: int, lam: float, Lam: float, p: float) -> bool:
    return p > n + 1 and sphere_margin(n, lam, Lam, p) >= -1e-12 * Lam * sphere_area(n)


def phi1_eval(x, p: float, kappa0: float, R: float) -> np.ndarray:
    """``min((kappa0 R)^-p, |x|^-p)`` for points of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    s = np.sqrt((x * x).sum(-1)) if x.ndim else np.abs(x)
    return np.maximum(s, kappa0 * R) ** -p


def phi1_function(n: int, p: float, kappa0: float, R: float) -> PointFunction:
    return power_decay(n, p, kappa0 * R)


def ring_radii(n: int, sigma_lower: float, R: float, count: int = 8) -> np.ndarray:
    """``r_k = rho0 2^(-1/(2 - sigma_lower) - k) R`` for ``k = 0..count-1``."""
    k = np.arange(count)
    return rho0(n) * 2.0 ** (-1.0 / (2.0 - sigma_lower) - k) * R


@dataclass(frozen=True)
class BarrierParams:
    """Parameters of both barriers.

    ``kappa0`` may be left at 0 until it has been found.
    """

    n: int
    lam: float
    Lam: float
    R: float
    kappa1: float
    p: float
    kappa0: float = 0.0
    sigma0: float = math.nan

    def __post_init__(self):
        if not 0 < self.lam <= self.Lam:
            raise ValueError("need 0 < lambda <= Lambda")
        if not 0 < self.kappa1 < 1:
            raise ValueError("kappa1 must lie in (0, 1)")
        if not self.p > self.n + 1:
            raise ValueError("p must exceed n + 1")
        if self.kappa0 and not 0 < self.kappa0 < self.kappa1 / 8:
            raise ValueError("kappa0 must lie in (0, kappa1 / 8)")

    @property
    def rho0(self) -> float:
        return rho0(self.n)


# ---------------------------------------------------------------- search


@dataclass(frozen=True)
class EvidenceRow:
    R0: float
    Mminus: float
    err: float
    I1: float
    I2plusI3: float

    @property
    def ok(self) -> bool:
        return self.Mminus >= -self.err


@dataclass
class Kappa0Search:
    """Outcome of :func:`find_kappa0`.

    ``evidence`` holds the rows for the accepted candidate (or the last one
    tried); ``recheck`` the same radii at doubled angular resolution.
    """

    params: BarrierParams
    tried: list = field(default_factory=list)
    evidence: list = field(default_factory=list)
    recheck: list = field(default_factory=list)
    found: bool = False

    @property
    def stable(self) -> bool:
        if not self.recheck:
            return False
        return all(a.ok == b.ok for a, b in zip(self.evidence, self.recheck))

    @property
    def passed(self) -> bool:
        return self.found and self.stable and all(r.ok for r in self.recheck)


def sample_radii(kappa1: float, R: float, count: int = 32) -> np.ndarray:
    """``count`` geometric radii in ``[kappa1 R, R)``."""
    return kappa1 * R * (1.0 / kappa1) ** (np.arange(count) / count)


def _evidence(phi, params: BarrierParams, kappa0: float, radii, tol, refine, sweep) -> list:
    n = params.n
    u = phi1_function(n, params.p, kappa0, params.R)
    ext = ExtremalParams(params.lam, params.Lam)
    rows = []
    for r in radii:
        x = np.zeros(n)
        x[0] = r
        v = pucci_minus(u, x, phi, ext, tol, refine=refine, sweep=sweep)
        rows.append(EvidenceRow(float(r), v.value, v.error, v.pole, v.value - v.pole))
    return rows


def find_kappa0(
    phi: ScalingFunction,
    n: int,
    lam: float,
    Lam: float,
    kappa1: float,
    R: float = 1.0,
    p: float | None = None,
    cert: WeakScalingCertificate | None = None,
    max_halvings: int = 16,
    samples: int = 32,
    tol: float = DEFAULT_TOL,
) -> Kappa0Search:
    """Halve ``kappa0`` from ``kappa1 / 16`` until the minimal operator of
    ``Phi_1`` is nonnegative (up to its enclosure) at every sampled radius.

    The accepted candidate is re-evaluated with doubled angular panels and
    no inner-radius shortcut; ``Kappa0Search.stable`` compares the signs.
    """
    cert = cert or phi.certificate()
    if p is None:
        p = select_p(n, lam, Lam)
    base = BarrierParams(n, lam, Lam, R, kappa1, p, sigma0=cert.sigma0)
    search = Kappa0Search(base)
    radii = sample_radii(kappa1, R, samples)
    kappa0 = kappa1 / 16.0
    for _ in range(max_halvings):
        rows = _evidence(phi, base, kappa0, radii, tol, refine=0, sweep=False)
        search.tried.append((kappa0, min(r.Mminus + r.err for r in rows)))
        search.evidence = rows
        if all(r.ok for r in rows):
            search.found = True
            search.params = BarrierParams(n, lam, Lam, R, kappa1, p, kappa0, cert.sigma0)
            search.recheck = _evidence(phi, base, kappa0, radii, tol, refine=1, sweep=True)
            return search
        kappa0 *= 0.5
    return search


# ---------------------------------------------------------------- capped barrier


@dataclass(frozen=True)
class CappedBarrier:
    """``c0 * P`` on ``B_{kappa0 R}``, ``c0 (kappa0 R)^p (|x|^-p - R^-p)`` on
    the annulus up to ``R`` and 0 outside."""

    params: BarrierParams
    c0: float
    a: float
    b: float

    @property
    def inner_radius(self) -> float:
        return self.params.kappa0 * self.params.R

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        pr = self.params
        r0 = self.inner_radius
        quad = -self.a * s * s + self.b
        mid = r0**pr.p * (np.maximum(s, r0) ** -pr.p - pr.R**-pr.p)
        return self.c0 * np.where(s < r0, quad, np.where(s < pr.R, mid, 0.0))

    def slope(self, s):
        s = np.asarray(s, dtype=float)
        pr = self.params
        r0 = self.inner_radius
        quad = -2.0 * self.a * s
        mid = -pr.p * r0**pr.p * np.maximum(s, r0) ** (-pr.p - 1)
        return self.c0 * np.where(s < r0, quad, np.where(s < pr.R, mid, 0.0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.profile(np.sqrt((x * x).sum(-1)))


def capped_barrier_build(params: BarrierParams) -> CappedBarrier:
    if not params.kappa0:
        raise ValueError("kappa0 has not been set")
    k0, p, R = params.kappa0, params.p, params.R
    c0 = 2.0 / (k0**p * ((4.0 / 3.0) ** p - 1.0))
    a = 0.5 * p * (k0 * R) ** -2
    b = 1.0 - k0**p + 0.5 * p
    return CappedBarrier(params, c0, a, b)


@dataclass(frozen=True)
class CappedReport:
    seam_value_rel: float
    seam_slope_rel: float
    min_on_three_quarters: float
    outside_max: float
    value_at_three_quarters: float
    pointwise_min_margin: float
    pointwise_samples: int

    @property
    def passed(self) -> bool:
        return (
            self.seam_value_rel <= 1e-10
            and self.seam_slope_rel <= 1e-10
            and self.min_on_three_quarters >= 2.0 * (1 - 1e-12)
            and self.outside_max == 0.0
            and self.pointwise_min_margin >= 0.0
        )


def verify_capped(barrier: CappedBarrier, samples: int = 4000, seed: int = 0) -> CappedReport:
    """Seam continuity, the lower bound on ``B_{3R/4}``, vanishing outside
    ``B_R`` and the pointwise comparison of second differences

    ``delta(Phi, x, y) >= c0 (kappa0 R)^p delta(Phi_1, x, y)``

    at random ``x`` in the annulus and random ``y``.  The comparison makes
    the sign of the minimal operator of ``Phi`` follow from that of ``Phi_1``.
    """
    pr = barrier.params
    n, R, r0, p = pr.n, pr.R, barrier.inner_radius, pr.p
    c0 = barrier.c0
    inside = c0 * (-barrier.a * r0 * r0 + barrier.b)
    outside = c0 * r0**p * (r0**-p - R**-p)
    seam_v = abs(inside - outside) / abs(outside)
    s_in = -2.0 * c0 * barrier.a * r0
    s_out = -p * c0 * r0**p * r0 ** (-p - 1)
    seam_s = abs(s_in - s_out) / abs(s_out)
    grid = np.linspace(0.0, 0.75 * R, 2001)
    min34 = float(barrier.profile(grid).min())
    out = float(np.abs(barrier.profile(np.linspace(R, 10 * R, 1001))).max())
    v34 = float(barrier.profile(0.75 * R))

    rng = np.random.default_rng(seed)
    # x uniform in radius over the annulus, y with log-uniform length
    rad = r0 * (R / r0) ** rng.random(samples)
    dirs = rng.normal(size=(samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    x = rad[:, None] * dirs
    ydir = rng.normal(size=(samples, n))
    ydir /= np.linalg.norm(ydir, axis=1, keepdims=True)
    ylen = 1e-3 * r0 * (1e4 * R / r0) ** rng.random(samples)
    y = ylen[:, None] * ydir
    dPhi = barrier(x + y) + barrier(x - y) - 2.0 * barrier(x)
    f1 = lambda z: phi1_eval(z, p, pr.kappa0, R)  # noqa: E731
    dPhi1 = f1(x + y) + f1(x - y) - 2.0 * f1(x)
    scale = c0 * r0**p
    rhs = scale * dPhi1
    mag = np.abs(barrier(x + y)) + np.abs(barrier(x - y)) + 2 * np.abs(barrier(x))
    margin = (dPhi - rhs + 1e-12 * mag) / np.maximum(mag, 1e-300)
    return CappedReport(seam_v, seam_s, min34, out, v34, float(margin.min()), samples)


def check_ring_radii(n: int, sigma_lower: float, R: float, count: int = 8) -> bool:
    r = ring_radii(n, sigma_lower, R, count)
    return bool(np.allclose(r[1:], 0.5 * r[:-1], rtol=1e-15, atol=0) and r[0] <= rho0(n) * R)

