"""Grid experiments in one dimension for the Harnack and Hoelder estimates.

A linear operator with kernel ``C_phi m / (|y| phi(|y|))`` is discretised on
a uniform grid by integrating the kernel against the piecewise-linear
interpolant of the grid function.  The innermost cell uses the second
difference weighted by the exact second moment.  Exterior values beyond the
truncation distance enter through tail integrals of the kernel against the
closed-form exterior data.  Dirichlet problems on ``B_{2R}`` are solved
densely and the solutions measured on ``B_R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import toeplitz

from ._quad import EPS, averaged_partial_sums, fixed_panels, gauss_legendre
from .errors import ConfigError, PropertyFailure
from .kernel import Power, ScalingFunction, SumPowers, lower_moment, rhs_scale, upper_moment
from .normalizer import cached_cphi, cphi_direct

HOLDER_ALPHAS = tuple(round(0.05 * k, 2) for k in range(1, 11))
STABILITY = 0.05
HOLDER_STABILITY = 0.10
UNIFORMITY_FACTOR = 10.0
SIGMA_MAX = 1.95


def _kernel(phi: ScalingFunction, y) -> np.ndarray:
    """``1 / (y phi(y))`` for ``y > 0``."""
    t = np.log(y)
    return np.exp(-t - phi.log_phi(t))


def _cphi(phi: ScalingFunction) -> float:
    try:
        return cached_cphi(phi, 1, 1e-10).value
    except TypeError:  # unhashable tables
        return cphi_direct(phi, 1, 1e-10).value


# ---------------------------------------------------------------- grid and data


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[-(2R + T), 2R + T]`` with ``T`` the truncation
    distance of the kernel.

    Nodes with ``|x| < 2R`` are unknowns; the others carry exterior data.
    """

    R: float
    h: float
    truncation: float = math.nan

    def __post_init__(self):
        if not (self.R > 0 and self.h > 0):
            raise ConfigError("grid needs R > 0 and h > 0")
        q = self.R / self.h
        if abs(q - round(q)) > 1e-9 * q or round(q) < 2:
            raise ConfigError(f"h = {self.h} does not divide R = {self.R}")
        if math.isnan(self.truncation):
            object.__setattr__(self, "truncation", 8.0 * self.R)
        t = self.truncation / self.h
        if abs(t - round(t)) > 1e-9 * t or self.truncation < 2 * self.h:
            raise ConfigError("truncation radius must be a multiple of h")

    @property
    def n_half(self) -> int:
        """Number of steps from 0 to ``2R``."""
        return int(round(2 * self.R / self.h))

    @property
    def reach(self) -> int:
        """Number of steps covered by the kernel before truncation."""
        return int(round(self.truncation / self.h))

    @property
    def nodes(self) -> np.ndarray:
        m = self.n_half + self.reach
        return self.h * np.arange(-m, m + 1)

    @property
    def interior(self) -> np.ndarray:
        """Boolean mask of the unknowns, ``|x| < 2R``."""
        i = np.arange(-(self.n_half + self.reach), self.n_half + self.reach + 1)
        return np.abs(i) < self.n_half

    @property
    def ball(self) -> np.ndarray:
        """Boolean mask of ``|x| <= R``."""
        i = np.arange(-(self.n_half + self.reach), self.n_half + self.reach + 1)
        return np.abs(i) <= self.n_half // 2

    def refined(self) -> "Grid1D":
        return Grid1D(self.R, self.h / 2, self.truncation)

    def extended(self) -> "Grid1D":
        return Grid1D(self.R, self.h, 2 * self.truncation)


class ExteriorRule:
    """Closed-form data ``g``.

    ``g`` equals ``far_value`` outside a bounded set; ``pieces`` lists the
    intervals where ``g - far_value`` is nonzero and smooth.
    """

    name = "exterior"
    far_value = 0.0

    def values(self, x) -> np.ndarray:
        raise NotImplementedError

    def pieces(self) -> list[tuple[float, float]]:
        return []

    def far(self, x, Y: float, phi: ScalingFunction) -> np.ndarray:
        """``int_{|y| > Y} (g(x + y) + g(x - y)) / (|y| phi(|y|)) dy``.

        The constant part goes through the upper moment, the compact part
        through Gauss quadrature on each piece cut at ``Y``.
        """
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, 4.0 * self.far_value * upper_moment(phi, Y).value)
        z, w = gauss_legendre(24)
        k = 8
        t = ((np.arange(k)[:, None] + 0.5 * (z[None, :] + 1.0)) / k).ravel()
        tw = np.tile(0.5 * w / k, k)
        for a, b in self.pieces():
            for sign in (1.0, -1.0):
                # g(x + sign y) lies on the piece for y in (lo, hi)
                if sign > 0:
                    lo, hi = a - x, b - x
                else:
                    lo, hi = x - b, x - a
                lo = np.maximum(lo, Y)
                L = np.clip(hi - lo, 0.0, None)
                ok = L > 0
                if not ok.any():
                    continue
                y = lo[ok, None] + L[ok, None] * t[None, :]
                vals = (self.values(x[ok, None] + sign * y) - self.far_value) * _kernel(phi, y)
                out[ok] += L[ok] * (vals * tw[None, :]).sum(1)
        return out


@dataclass(frozen=True)
class ConstantData(ExteriorRule):
    c: float = 1.0
    name = "constant"

    @property
    def far_value(self):
        return self.c

    def values(self, x):
        return np.full(np.shape(x), float(self.c))


@dataclass(frozen=True)
class AffineData(ExteriorRule):
    slope: float = 1.0
    offset: float = 0.0
    name = "affine"

    def values(self, x):
        return self.offset + self.slope * np.asarray(x, dtype=float)

    def far(self, x, Y, phi):
        # g(x + y) + g(x - y) = 2 g(x)
        return 4.0 * self.values(x) * upper_moment(phi, Y).value


@dataclass(frozen=True)
class BumpData(ExteriorRule):
    """``amp (1 - ((|x| - c) / w)^2)^4`` on ``lo < |x| < hi``; ``side``
    restricts it to the positive (+1) or negative (-1) half-line, 0 keeps both."""

    lo: float
    hi: float
    amp: float = 1.0
    side: int = 0
    name = "bump"

    def values(self, x):
        x = np.asarray(x, dtype=float)
        c, w = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
        s = (np.abs(x) - c) / w
        v = self.amp * np.where(np.abs(s) < 1, (1 - s * s) ** 4, 0.0)
        if self.side:
            v = np.where(self.side * x > 0, v, 0.0)
        return v

    def pieces(self):
        out = []
        if self.side >= 0:
            out.append((self.lo, self.hi))
        if self.side <= 0:
            out.append((-self.hi, -self.lo))
        return out


@dataclass(frozen=True)
class CosineData(ExteriorRule):
    """``cos x`` everywhere."""

    name = "cosine"

    def values(self, x):
        return np.cos(np.asarray(x, dtype=float))

    def far(self, x, Y, phi):
        # cos(x + y) + cos(x - y) = 2 cos x cos y
        first = (math.floor(Y / math.pi - 0.5) + 1.5) * math.pi
        f = lambda y: np.cos(y) * _kernel(phi, y)  # noqa: E731
        head = fixed_panels(f, np.linspace(Y, first, 9))[0].sum() if first > Y else 0.0
        edges = first + math.pi * np.arange(41)
        blocks = []
        for a, b in zip(edges[:-1], edges[1:]):
            blocks.append(fixed_panels(f, np.linspace(a, b, 5))[0].sum())
        tail, _ = averaged_partial_sums(blocks)
        return 4.0 * np.cos(np.asarray(x, dtype=float)) * (head + tail)


@dataclass(frozen=True)
class QuadraticCapData(ExteriorRule):
    """``min(1, x^2 / (4 r^2))``, the comparison function on the line."""

    radius: float = 4.0
    name = "w_R"

    @property
    def far_value(self):
        return 1.0

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return np.minimum(1.0, x * x / (4 * self.radius**2))

    def pieces(self):
        return [(-2 * self.radius, 0.0), (0.0, 2 * self.radius)]


def data_rule(name: str, R: float) -> ExteriorRule:
    """Named exterior data scaled to the grid radius ``R``."""
    if name == "bump":
        return BumpData(3 * R, 5 * R)
    if name == "bump-right":
        return BumpData(3 * R, 5 * R, side=1)
    if name == "constant":
        return ConstantData(1.0)
    raise ConfigError(f"unknown exterior data {name!r}; expected bump, bump-right or constant")


DATA_NAMES = ("bump", "bump-right", "constant")


# ---------------------------------------------------------------- operator


@dataclass
class DiscreteOperator:
    """``L u(x_i) = C m [sum_j c_j (u_{i+j} + u_{i-j} - 2 u_i) + tail_i]``.

    ``weights[j]`` is ``c_j`` for ``j = 0..reach`` (``c_0 = 0``).  The tail
    term is ``far_i - 2 u_i * tail_mass`` where ``far_i`` comes from the
    exterior rule.
    """

    grid: Grid1D
    phi: ScalingFunction
    m: float
    cphi: float
    weights: np.ndarray
    tail_mass: float
    rule: ExteriorRule | None = None
    moment_matched: bool = True

    @property
    def factor(self) -> float:
        return self.cphi * self.m

    @property
    def diagonal(self) -> float:
        return 2.0 * self.weights.sum() + 2.0 * self.tail_mass

    def _stencil(self) -> np.ndarray:
        return np.concatenate([self.weights[:0:-1], [0.0], self.weights[1:]])

    def apply(self, u_full, rule: ExteriorRule | None = None) -> np.ndarray:
        """Operator values at the interior nodes for nodal values ``u_full``."""
        rule = rule or self.rule
        g = self.grid
        u = np.asarray(u_full, dtype=float)
        if u.shape != g.nodes.shape:
            raise ValueError("grid function has the wrong length")
        conv = np.convolve(u, self._stencil(), mode="same")
        inner = g.interior
        far = rule.far(g.nodes[inner], g.truncation, self.phi) if rule is not None else 0.0
        return self.factor * (conv[inner] - self.diagonal * u[inner] + far)

    def error_model(self, u_full) -> float:
        """Rounding bound for :meth:`apply`."""
        return 64 * EPS * self.factor * self.diagonal * float(np.max(np.abs(u_full)))


def discretize(
    phi: ScalingFunction, m: float, grid: Grid1D, rule: ExteriorRule | None = None, cphi: float | None = None
) -> DiscreteOperator:
    """Assemble the nonnegative grid weights for multiplier ``m``.

    Cell ``[jh, (j+1)h]`` for ``j >= 1`` is integrated against the linear
    interpolant, splitting its kernel mass between nodes ``j`` and ``j+1``.
    Cell ``[0, h]`` contributes ``2 lower(h) / h^2`` to the nearest
    neighbours, less the interpolation excess on quadratics.
    """
    if not m > 0:
        raise ConfigError("the multiplier must be positive")
    if not phi.domain[0] <= grid.h and grid.truncation <= phi.domain[1]:
        raise ConfigError("grid spacing or truncation outside the kernel's tabulated range")
    h, J = grid.h, grid.reach
    z, w = gauss_legendre(16)
    theta = 0.5 * (z + 1.0)
    j = np.arange(1, J)
    y = h * (j[:, None] + theta[None, :])
    K = _kernel(phi, y) * (0.5 * h * w)[None, :]
    a = (K * (1.0 - theta)[None, :]).sum(1)  # mass toward node j
    b = (K * theta[None, :]).sum(1)  # mass toward node j + 1
    c = np.zeros(J + 1)
    c[1:J] += 2.0 * a
    c[2 : J + 1] += 2.0 * b
    c[1] += 2.0 * lower_moment(phi, h).value / h**2
    # The interpolant overshoots convex data by h^2 theta (1 - theta) per
    # cell; remove that excess from the nearest weight so quadratics are
    # integrated exactly, unless doing so would make the weight negative.
    excess = (c * (h * np.arange(J + 1)) ** 2).sum() - 2.0 * lower_moment(phi, grid.truncation).value
    matched = excess / h**2 <= c[1]
    c[1] -= min(excess / h**2, c[1])
    tail = 2.0 * upper_moment(phi, grid.truncation).value
    C = _cphi(phi) if cphi is None else cphi
    if np.any(c < 0):
        raise PropertyFailure("negative quadrature weight")
    return DiscreteOperator(grid, phi, float(m), float(C), c, float(tail), rule, bool(matched))


def solve_dirichlet(op: DiscreteOperator, f=0.0, g: ExteriorRule | None = None) -> np.ndarray:
    """Solve ``L u = f`` on ``|x| < 2R`` with ``u = g`` elsewhere.

    Returns nodal values on the whole grid.  With ``f = 0`` and ``g >= 0``
    the discrete minimum principle is asserted.
    """
    g = g or op.rule
    if g is None:
        raise ConfigError("no exterior rule given")
    grid = op.grid
    x = grid.nodes
    inner = grid.interior
    ni = int(inner.sum())
    col = np.zeros(ni)
    k = min(ni - 1, grid.reach)
    col[1 : k + 1] = op.weights[1 : k + 1]
    col[0] = -op.diagonal
    A = toeplitz(col)
    if not np.all(np.abs(np.diag(A)) > np.abs(A).sum(1) - np.abs(np.diag(A))):
        raise PropertyFailure("discrete operator is not diagonally dominant")
    ext = np.where(inner, 0.0, g.values(x))
    load = np.convolve(ext, op._stencil(), mode="same")[inner] + g.far(x[inner], grid.truncation, op.phi)
    f_in = np.broadcast_to(np.asarray(f, dtype=float), x.shape)[inner] if np.ndim(f) else np.full(ni, float(f))
    rhs = f_in / op.factor - load
    try:
        ui = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise PropertyFailure(f"grid solve failed: {exc}") from exc
    u = ext.copy()
    u[inner] = ui
    if np.all(f_in == 0):
        gx = g.values(x[~inner])
        if np.all(gx >= 0) and ui.min() < -1e-12 * max(1.0, float(np.abs(gx).max())):
            raise PropertyFailure(f"minimum principle violated: min u = {ui.min():.3e}")
    return u


# ---------------------------------------------------------------- measurements


def holder_report(u, x, R: float, alphas=HOLDER_ALPHAS) -> list[tuple[float, float]]:
    """``(alpha, R^alpha [u]_alpha)`` over the nodes with ``|x| <= R``."""
    x = np.asarray(x, dtype=float)
    sel = np.abs(x) <= R * (1 + 1e-12)
    xs, us = x[sel], np.asarray(u, dtype=float)[sel]
    i, j = np.triu_indices(xs.size, 1)
    dx = np.abs(xs[i] - xs[j])
    du = np.abs(us[i] - us[j])
    out = []
    for a in alphas:
        s = float((du / dx**a).max()) if dx.size else 0.0
        out.append((float(a), R**a * s))
    return out


@dataclass(frozen=True)
class DecayFit:
    eps: float
    r2: float
    points: int
    t: tuple
    measure: tuple

    @property
    def ok(self) -> bool:
        return self.points >= 4 and self.eps > 0


def level_set_decay(u, x, R: float, h: float, t=None, count: int = 48) -> DecayFit:
    """Fit ``|{u > t} cap B_R| ~ t^-eps`` on the decaying part of the curve.

    The default ``t`` grid is geometric between the minimum and maximum of
    ``u`` on ``B_R``.  Fewer than four strictly decaying, nonzero points give
    ``eps = nan``.
    """
    x = np.asarray(x, dtype=float)
    sel = np.abs(x) <= R * (1 + 1e-12)
    us = np.asarray(u, dtype=float)[sel]
    if t is None:
        lo, hi = float(us.min()), float(us.max())
        # a flat profile (up to rounding) has no decaying segment
        flat = hi - lo <= 1e-9 * abs(hi)
        t = np.geomspace(lo, hi, count) if lo > 0 and not flat else np.array([max(hi, EPS)])
    t = np.asarray(t, dtype=float)
    meas = np.array([h * np.count_nonzero(us > s) for s in t])
    full = h * us.size
    keep = (meas > 0) & (meas < full) & (t > 0)
    if keep.sum() < 4:
        return DecayFit(math.nan, math.nan, int(keep.sum()), tuple(t), tuple(meas))
    X, Y = np.log(t[keep]), np.log(meas[keep])
    slope, icpt = np.polyfit(X, Y, 1)
    pred = slope * X + icpt
    ss = float(((Y - Y.mean()) ** 2).sum())
    r2 = 1.0 - float(((Y - pred) ** 2).sum()) / ss if ss > 0 else 1.0
    return DecayFit(float(-slope), r2, int(keep.sum()), tuple(t), tuple(meas))


@dataclass
class HarnackReport:
    """Measurements of one grid solution and its stability checks."""

    kernel: str
    data: str
    R: float
    h: float
    sup: float = math.nan
    inf: float = math.nan
    scale: float = math.nan
    C0: float = 0.0
    holder: list = field(default_factory=list)
    holder_refined: list = field(default_factory=list)
    sup_norm: float = math.nan
    decay: DecayFit | None = None
    quotient_refined: float = math.nan
    quotient_extended: float = math.nan
    failure: str = ""

    @property
    def quotient(self) -> float:
        return self.sup / self.inf

    @property
    def C_emp(self) -> float:
        return self.sup / (self.inf + self.C0 * self.scale)

    @property
    def eps(self) -> float:
        return self.decay.eps if self.decay else math.nan

    @property
    def quotient_drift(self) -> float:
        q = self.quotient
        return max(abs(self.quotient_refined - q), abs(self.quotient_extended - q)) / q

    @property
    def stable(self) -> bool:
        return not self.failure and self.quotient_drift <= STABILITY

    @property
    def holder_drift(self) -> float:
        if not self.holder_refined:
            return math.nan
        d = 0.0
        floor = 1e-9 * self.sup_norm  # seminorms of a flat profile are rounding
        for (_, s1), (_, s2) in zip(self.holder, self.holder_refined):
            if max(abs(s1), abs(s2)) <= floor:
                continue
            d = max(d, abs(s2 - s1) / max(abs(s1), abs(s2)))
        return d

    @property
    def holder_stable(self) -> bool:
        return self.holder_drift <= HOLDER_STABILITY

    def holder_ratio(self) -> list[tuple[float, float]]:
        """``R^alpha [u]_alpha / (||u|| + C0 scale)`` per alpha."""
        rhs = self.sup_norm + self.C0 * self.scale
        return [(a, s / rhs) for a, s in self.holder]

    def as_row(self) -> dict:
        return {
            "kernel": self.kernel,
            "data": self.data,
            "R": self.R,
            "h": self.h,
            "sup": self.sup,
            "inf": self.inf,
            "quotient": self.quotient if not self.failure else math.nan,
            "scale": self.scale,
            "C0": self.C0,
            "C_emp": self.C_emp if not self.failure else math.nan,
            "eps": self.eps,
            "eps_r2": self.decay.r2 if self.decay else math.nan,
            "holder_alpha": 0.25,
            "holder_seminorm": dict(self.holder).get(0.25, math.nan),
            "quotient_drift": self.quotient_drift if not self.failure else math.nan,
            "holder_drift": self.holder_drift,
            "failure": self.failure,
        }


def _solve_case(phi, rule_name, grid, m, f0):
    rule = data_rule(rule_name, grid.R)
    op = discretize(phi, m, grid, rule)
    u = solve_dirichlet(op, f0, rule)
    return op, u


def harnack_case(
    phi: ScalingFunction, data: str, R: float = 1.0, h: float | None = None, m: float = 1.0, f0: float = 0.0,
    checks: bool = True,
) -> HarnackReport:
    """Solve ``L u = f0`` with the named exterior data and measure ``u``."""
    h = R / 200 if h is None else h
    grid = Grid1D(R, h)
    rep = HarnackReport(phi.label, data, R, h, C0=abs(f0))
    rep.scale = rhs_scale(phi, R, 1).scale
    op, u = _solve_case(phi, data, grid, m, f0)
    x = grid.nodes
    ub = u[grid.ball]
    rep.sup, rep.inf = float(ub.max()), float(ub.min())
    rep.sup_norm = float(np.abs(u).max())
    if not rep.inf > 0:
        rep.failure = f"solution not positive on B_R (inf = {rep.inf:.3e})"
        return rep
    rep.holder = holder_report(u, x, R)
    rep.decay = level_set_decay(u, x, R, h)
    if checks:
        g2 = grid.refined()
        _, u2 = _solve_case(phi, data, g2, m, f0)
        b2 = u2[g2.ball]
        rep.quotient_refined = float(b2.max() / b2.min())
        rep.holder_refined = holder_report(u2, g2.nodes, R)
        g3 = grid.extended()
        _, u3 = _solve_case(phi, data, g3, m, f0)
        b3 = u3[g3.ball]
        rep.quotient_extended = float(b3.max() / b3.min())
    return rep


def family_kernels(family: str, sigmas: Sequence[float], sigma0: float | None = None) -> list[ScalingFunction]:
    """Power kernels, or two-exponent sums sharing the lower exponent ``sigma0``."""
    sig = sorted(float(s) for s in sigmas)
    if not sig:
        raise ConfigError("empty sigma grid")
    s0 = sig[0] if sigma0 is None else float(sigma0)
    if not (0 < s0 <= sig[0] and sig[-1] <= SIGMA_MAX):
        raise ConfigError(f"sigma grid must lie in [sigma0, {SIGMA_MAX}]")
    if family == "power":
        return [Power(s) for s in sig]
    if family == "sumpowers":
        return [SumPowers(s0, s) for s in sig]
    raise ConfigError(f"unknown family {family!r}; expected power or sumpowers")


@dataclass
class SweepSummary:
    reports: list

    @property
    def ok_reports(self) -> list:
        return [r for r in self.reports if not r.failure]

    @property
    def uniformity_ratio(self) -> float:
        c = np.array([r.C_emp for r in self.ok_reports])
        return float(c.max() / np.median(c)) if c.size else math.inf

    @property
    def all_stable(self) -> bool:
        return bool(self.ok_reports) and all(r.stable for r in self.ok_reports)

    @property
    def holder_stable(self) -> bool:
        return all(r.holder_stable for r in self.ok_reports)

    @property
    def decay_positive(self) -> bool:
        # constant data have no decaying segment; only nonconstant cases count
        return all(r.decay.ok for r in self.ok_reports if r.data != "constant")

    @property
    def passed(self) -> bool:
        return (
            len(self.ok_reports) == len(self.reports)
            and self.all_stable
            and self.holder_stable
            and self.decay_positive
            and self.uniformity_ratio <= UNIFORMITY_FACTOR
        )

    def as_dict(self) -> dict:
        return {
            "cases": len(self.reports),
            "failures": [f"{r.kernel}/{r.data}: {r.failure}" for r in self.reports if r.failure],
            "uniformity_ratio": self.uniformity_ratio,
            "uniformity_threshold": UNIFORMITY_FACTOR,
            "max_quotient_drift": max((r.quotient_drift for r in self.ok_reports), default=math.nan),
            "max_holder_drift": max((r.holder_drift for r in self.ok_reports), default=math.nan),
            "all_stable": self.all_stable,
            "holder_stable": self.holder_stable,
            "decay_positive": self.decay_positive,
            "passed": self.passed,
        }


def harnack_sweep(
    kernels: Sequence[ScalingFunction],
    R: float = 1.0,
    data: Sequence[str] = ("bump",),
    h: float | None = None,
    m: float = 1.0,
    f0: float = 0.0,
    checks: bool = True,
) -> SweepSummary:
    """One :func:`harnack_case` per kernel and datum, in order.

    A failing case is recorded with its message and does not stop the sweep.
    """
    s0 = {k.certificate().sigma_lower for k in kernels}
    if kernels and min(s0) <= 0:
        raise ConfigError("kernels need a positive lower exponent")
    reports = []
    for phi in kernels:
        for d in data:
            try:
                reports.append(harnack_case(phi, d, R, h, m, f0, checks))
            except (PropertyFailure, np.linalg.LinAlgError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                rep = HarnackReport(phi.label, d, R, h or R / 200)
                rep.failure = str(exc)
                reports.append(rep)
    return SweepSummary(reports)
