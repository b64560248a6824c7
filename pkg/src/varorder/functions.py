"""Test functions with global values and local second-order data.

A :class:`PointFunction` carries what the operator quadrature needs: the
values everywhere, the Hessian at the evaluation point, a sup bound, and
structural hints (symmetry, kink locations, far-field behaviour) that let
the quadrature place panel breaks and close the tail exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class PointFunction:
    """An evaluable function on ``R^n`` for classical operator evaluation.

    Attributes
    ----------
    name : str
    n : int
        Dimension.
    symmetry : {"radial", "axial", "none"}
        ``radial`` means ``u(x) = U(|x|)``, ``axial`` means ``u(x) = U(x_1)``.
    profile, d1, d2 : callable, optional
        ``U`` and its first two derivatives for the symmetric cases.
    evaluate : callable, optional
        ``u`` on points of shape (..., n), required when ``symmetry="none"``.
    hess : callable, optional
        Hessian at a point, required when ``symmetry="none"``.
    sup : float
        Bound on ``|u|`` over ``R^n``.
    kinks : tuple of float
        Radii (radial) or ``x_1`` positions (axial) where ``U`` is not smooth.
    far_radius, far_value : float
        ``u == far_value`` outside the ball of radius ``far_radius``.
    envelope : callable, optional
        ``envelope(s)`` bounds ``|u(z) - far_value|`` for ``|z| >= s``; used
        when the function decays without reaching its limit.
    period : float, optional
        Period of a single-harmonic axial profile ``A cos(2 pi s / period +
        c) + m``; enables the accelerated oscillatory tail.
    peak : float, optional
        Radius of a tall plateau at the origin (radial only); evaluation
        points well outside it use the pole-split quadrature.
    scale : float
        Characteristic length; the default inner radius is ``1e-3 * scale``.
    c3, c4 : float
        Bounds on third and fourth directional derivatives near smooth
        points, used for the inner-ball remainder.
    local_bounds : callable, optional
        ``local_bounds(x, radius) -> (c3, c4)`` on the ball ``B(x, radius)``,
        for functions whose derivatives blow up somewhere.
    """

    name: str
    n: int
    symmetry: str = "none"
    profile: Callable | None = None
    d1: Callable | None = None
    d2: Callable | None = None
    evaluate: Callable | None = None
    hess: Callable | None = None
    sup: float = math.inf
    kinks: tuple = ()
    far_radius: float | None = None
    far_value: float = 0.0
    envelope: Callable | None = None
    period: float | None = None
    peak: float | None = None
    scale: float = 1.0
    c3: float = math.inf
    c4: float = math.inf
    local_bounds: Callable | None = None

    def __post_init__(self):
        if self.symmetry not in ("radial", "axial", "none"):
            raise ValueError(f"unknown symmetry {self.symmetry!r}")
        if self.symmetry == "none" and (self.evaluate is None or self.hess is None):
            raise ValueError("a function without symmetry needs evaluate and hess")
        if self.symmetry != "none" and (self.profile is None or self.d1 is None or self.d2 is None):
            raise ValueError("symmetric functions need profile, d1 and d2")

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.shape[-1] != self.n:
            raise ValueError(f"points must have last dimension {self.n}")
        if self.symmetry == "radial":
            return self.profile(np.sqrt((pts * pts).sum(-1)))
        if self.symmetry == "axial":
            return self.profile(pts[..., 0])
        return self.evaluate(pts)

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.symmetry == "none":
            return np.asarray(self.hess(x), dtype=float)
        H = np.zeros((self.n, self.n))
        if self.symmetry == "axial":
            H[0, 0] = float(self.d2(x[0]))
            return H
        s = float(np.linalg.norm(x))
        if s == 0.0:
            return float(self.d2(0.0)) * np.eye(self.n)
        e = x / s
        u1, u2 = float(self.d1(s)), float(self.d2(s))
        return u2 * np.outer(e, e) + (u1 / s) * (np.eye(self.n) - np.outer(e, e))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.n)
        if self.symmetry == "axial":
            g[0] = float(self.d1(x[0]))
        elif self.symmetry == "radial":
            s = float(np.linalg.norm(x))
            if s > 0:
                g = float(self.d1(s)) * x / s
        else:
            h = 1e-6 * max(1.0, float(np.abs(x).max()))
            for i in range(self.n):
                e = np.zeros(self.n)
                e[i] = h
                g[i] = (float(self(x + e)) - float(self(x - e))) / (2 * h)
        return g

    def kink_distance(self, x) -> float:
        """Distance from ``x`` to the nearest non-smooth set."""
        x = np.asarray(x, dtype=float)
        if not self.kinks:
            return math.inf
        coord = float(np.linalg.norm(x)) if self.symmetry == "radial" else float(x[0])
        return min(abs(coord - k) for k in self.kinks)

    def scaled(self, factor: float) -> "PointFunction":
        """``factor * u``."""
        f = float(factor)
        kw = dict(
            name=f"{f!r}*{self.name}",
            sup=abs(f) * self.sup,
            far_value=f * self.far_value,
            c3=abs(f) * self.c3,
            c4=abs(f) * self.c4,
        )
        if self.symmetry != "none":
            p, a, b = self.profile, self.d1, self.d2
            kw.update(profile=lambda s: f * p(s), d1=lambda s: f * a(s), d2=lambda s: f * b(s))
        else:
            ev, hs = self.evaluate, self.hess
            kw.update(evaluate=lambda z: f * ev(z), hess=lambda z: f * np.asarray(hs(z)))
        if self.envelope is not None:
            env = self.envelope
            kw["envelope"] = lambda s: abs(f) * env(s)
        if self.local_bounds is not None:
            lb = self.local_bounds
            kw["local_bounds"] = lambda z, r: tuple(abs(f) * c for c in lb(z, r))
        return replace(self, **kw)

    def __neg__(self) -> "PointFunction":
        return self.scaled(-1.0)

    def __add__(self, other: "PointFunction") -> "PointFunction":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        if self.symmetry != other.symmetry or self.symmetry == "none":
            u, v = self, other

            def ev(z):
                return u(z) + v(z)

            def hs(z):
                return u.hessian(z) + v.hessian(z)

            return PointFunction(
                name=f"{u.name}+{v.name}",
                n=u.n,
                evaluate=ev,
                hess=hs,
                sup=u.sup + v.sup,
                scale=min(u.scale, v.scale),
                c3=u.c3 + v.c3,
                c4=u.c4 + v.c4,
            )
        far = None
        if self.far_radius is not None and other.far_radius is not None:
            far = max(self.far_radius, other.far_radius)
        period = self.period if self.period == other.period else None
        env = None
        if self.envelope is not None or other.envelope is not None:
            e1 = self.envelope or (lambda s: 0.0 if self.far_radius is not None and s >= self.far_radius else math.inf)
            e2 = other.envelope or (lambda s: 0.0 if other.far_radius is not None and s >= other.far_radius else math.inf)
            env = lambda s: e1(s) + e2(s)  # noqa: E731
        p1, p2 = self, other
        return PointFunction(
            name=f"{p1.name}+{p2.name}",
            n=p1.n,
            symmetry=p1.symmetry,
            profile=lambda s: p1.profile(s) + p2.profile(s),
            d1=lambda s: p1.d1(s) + p2.d1(s),
            d2=lambda s: p1.d2(s) + p2.d2(s),
            sup=p1.sup + p2.sup,
            kinks=tuple(sorted(set(p1.kinks) | set(p2.kinks))),
            far_radius=far,
            far_value=p1.far_value + p2.far_value,
            envelope=env,
            period=period,
            peak=None,
            scale=min(p1.scale, p2.scale),
            c3=p1.c3 + p2.c3,
            c4=p1.c4 + p2.c4,
        )


# ---------------------------------------------------------------- built-ins


def cos_x1(n: int) -> PointFunction:
    """``cos(x_1)``."""
    return PointFunction(
        name="cos",
        n=n,
        symmetry="axial",
        profile=np.cos,
        d1=lambda s: -np.sin(s),
        d2=lambda s: -np.cos(s),
        sup=1.0,
        period=2 * math.pi,
        scale=1.0,
        c3=1.0,
        c4=1.0,
    )


def bump(n: int) -> PointFunction:
    """Polynomial bump ``(1 - |x|^2)^4`` on the unit ball, zero outside.

    Third and fourth directional derivatives are bounded by 336 and 1680:
    with ``q = |x + t e|^2``, ``q' = 2 (x + t e) . e`` and ``q'' = 2``, the
    chain rule gives ``24*8 + 3*12*2*2`` and ``24*16 + 6*24*4*2 + 3*12*4``.
    """

    def U(s):
        s = np.asarray(s, dtype=float)
        return np.where(s < 1.0, (1.0 - np.minimum(s, 1.0) ** 2) ** 4, 0.0)

    def U1(s):
        s = np.asarray(s, dtype=float)
        return np.where(s < 1.0, -8.0 * s * (1.0 - np.minimum(s, 1.0) ** 2) ** 3, 0.0)

    def U2(s):
        s = np.asarray(s, dtype=float)
        w = 1.0 - np.minimum(s, 1.0) ** 2
        return np.where(s < 1.0, -8.0 * w**3 + 48.0 * s * s * w**2, 0.0)

    return PointFunction(
        name="bump",
        n=n,
        symmetry="radial",
        profile=U,
        d1=U1,
        d2=U2,
        sup=1.0,
        kinks=(1.0,),
        far_radius=1.0,
        far_value=0.0,
        scale=1.0,
        c3=336.0,
        c4=1680.0,
    )


def quadratic_cap(n: int, radius: float = 1.0) -> PointFunction:
    """``min(|x|^2, radius^2)``: a paraboloid capped at height ``radius^2``."""
    r2 = radius * radius

    def U(s):
        s = np.asarray(s, dtype=float)
        return np.minimum(s * s, r2)

    return PointFunction(
        name="quadratic-cap",
        n=n,
        symmetry="radial",
        profile=U,
        d1=lambda s: np.where(np.asarray(s) < radius, 2.0 * np.asarray(s), 0.0),
        d2=lambda s: np.where(np.asarray(s) < radius, 2.0, 0.0),
        sup=r2,
        kinks=(radius,),
        far_radius=radius,
        far_value=r2,
        scale=radius,
        c3=0.0,
        c4=0.0,
    )


def w_R(n: int, R: float) -> PointFunction:
    """``min(1, |x|^2 / (4 R^2))``, the comparison-principle test function."""
    c = 1.0 / (4.0 * R * R)

    def U(s):
        s = np.asarray(s, dtype=float)
        return np.minimum(1.0, c * s * s)

    return PointFunction(
        name="w_R",
        n=n,
        symmetry="radial",
        profile=U,
        d1=lambda s: np.where(np.asarray(s) < 2 * R, 2 * c * np.asarray(s), 0.0),
        d2=lambda s: np.where(np.asarray(s) < 2 * R, 2 * c, 0.0),
        sup=1.0,
        kinks=(2.0 * R,),
        far_radius=2.0 * R,
        far_value=1.0,
        scale=R,
        c3=0.0,
        c4=0.0,
    )


def affine(n: int, slope, offset: float = 0.0, radius: float = math.inf) -> PointFunction:
    """``offset + slope . x`` inside the ball of radius ``radius``, 0 outside.

    Only points well inside the ball can be evaluated; the outside is
    accounted for by the sup-norm tail bound.
    """
    g = np.asarray(slope, dtype=float)

    def ev(z):
        z = np.asarray(z, dtype=float)
        inside = (z * z).sum(-1) < radius * radius
        return np.where(inside, offset + z @ g, 0.0)

    finite = math.isfinite(radius)
    return PointFunction(
        name="affine",
        n=n,
        evaluate=ev,
        hess=lambda z: np.zeros((n, n)),
        sup=abs(offset) + float(np.linalg.norm(g)) * radius if finite else math.inf,
        far_radius=radius if finite else None,
        scale=1.0,
        c3=0.0,
        c4=0.0,
    )


def power_decay(n: int, p: float, plateau: float) -> PointFunction:
    """``min(plateau^-p, |x|^-p)``: flat top of radius ``plateau``, then
    ``|x|^-p`` decay to zero."""

    top = plateau**-p

    def U(s):
        s = np.asarray(s, dtype=float)
        return np.where(s > plateau, np.maximum(s, plateau) ** -p, top)

    def U1(s):
        s = np.asarray(s, dtype=float)
        return np.where(s > plateau, -p * np.maximum(s, plateau) ** (-p - 1), 0.0)

    def U2(s):
        s = np.asarray(s, dtype=float)
        return np.where(s > plateau, p * (p + 1) * np.maximum(s, plateau) ** (-p - 2), 0.0)

    def env(s):
        return max(s, plateau) ** -p

    def local(x, radius):
        s = float(np.linalg.norm(x))
        if s - radius <= plateau:
            return math.inf, math.inf
        return power_derivative_bounds(p, s - radius)

    return PointFunction(
        name="power-decay",
        n=n,
        symmetry="radial",
        profile=U,
        d1=U1,
        d2=U2,
        sup=top,
        kinks=(plateau,),
        far_radius=None,
        far_value=0.0,
        envelope=env,
        peak=plateau,
        scale=plateau,
        local_bounds=local,
    )


def local_derivative_bounds(u: PointFunction, x, radius: float) -> tuple[float, float]:
    """Third and fourth derivative bounds of ``u`` on the ball ``B(x, radius)``."""
    if u.local_bounds is not None:
        return u.local_bounds(np.asarray(x, dtype=float), radius)
    return u.c3, u.c4


def power_derivative_bounds(p: float, s: float) -> tuple[float, float]:
    """Bounds on third and fourth directional derivatives of ``|z|^-p`` for
    ``|z| >= s``.

    Expanding ``|z + t e|^-p`` in Gegenbauer polynomials and using
    ``|C_k^(p/2)| <= C_k^(p/2)(1)`` gives ``(p)_k |z|^(-p-k)``.
    """
    return p * (p + 1) * (p + 2) * s ** (-p - 3), p * (p + 1) * (p + 2) * (p + 3) * s ** (-p - 4)


BUILTINS = {
    "cos": lambda n, **kw: cos_x1(n),
    "bump": lambda n, **kw: bump(n),
    "quadratic-cap": lambda n, **kw: quadratic_cap(n, kw.get("radius", 1.0)),
    "w_R": lambda n, **kw: w_R(n, kw.get("R", 4.0)),
}
