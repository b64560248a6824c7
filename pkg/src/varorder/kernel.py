"""Scaling functions, weak-scaling certificates and kernel moments.

A scaling function ``phi`` fixes the kernel ``K(y) ~ 1 / (|y|^n phi(|y|))``.
Every family is evaluated through its logarithm, ``log phi(e^t)``, so the
moment integrals can be pushed to radii far below the double-precision
range without underflow.

The two moments are

* ``lower_moment(phi, R) = int_0^R r / phi(r) dr``
* ``upper_moment(phi, R) = int_R^inf dr / (r phi(r))``

and both are returned as enclosures (value, half-width).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar, Mapping

import numpy as np

from ._quad import integrate
from .errors import ConfigError, ToleranceError

DEFAULT_TOL = 1e-11


@dataclass(frozen=True)
class WeakScalingCertificate:
    """Constants ``(a, sigma_lower, sigma_upper)`` of the two-sided bound

    ``a^-1 (R/r)^sigma_lower <= phi(R)/phi(r) <= a (R/r)^sigma_upper``

    together with the floor ``sigma0 <= sigma_lower``.
    """

    a: float
    sigma_lower: float
    sigma_upper: float
    sigma0: float | None = None

    def __post_init__(self):
        if self.sigma0 is None:
            object.__setattr__(self, "sigma0", self.sigma_lower)
        if not self.a >= 1:
            raise ValueError(f"certificate needs a >= 1, got {self.a}")
        if not 0 < self.sigma0 <= self.sigma_lower <= self.sigma_upper < 2:
            raise ValueError(
                "certificate needs 0 < sigma0 <= sigma_lower <= sigma_upper < 2, got "
                f"({self.sigma0}, {self.sigma_lower}, {self.sigma_upper})"
            )


def _log_L(t):
    # log(log(1 + r^-2)) at r = e^t, stable for very large and very small r
    t = np.asarray(t, dtype=float)
    big = t > 15.0
    small_branch = np.log(np.logaddexp(0.0, -2.0 * np.where(big, 15.0, t)))
    # log(log1p(x)) = log(x) - x/2 + O(x^2) for x = r^-2 < 1e-13
    x = np.exp(-2.0 * np.where(big, t, 15.0))
    return np.where(big, -2.0 * t - 0.5 * x, small_branch)


def _q_of(t):
    # 1 / ((1 + r^2) log(1 + r^-2)); increases from 0 to 1 as r goes 0 -> inf
    t = np.asarray(t, dtype=float)
    return np.exp(-np.logaddexp(0.0, 2.0 * t) - _log_L(t))


def _q_bounds(t_lo, t_hi):
    q_lo = 0.0 if t_lo == -math.inf else float(_q_of(t_lo))
    q_hi = 1.0 if t_hi == math.inf else float(_q_of(t_hi))
    return q_lo, q_hi


class ScalingFunction:
    """Base class of the scaling-function families.

    Subclasses implement :meth:`log_phi` (in the variable ``t = log r``),
    :meth:`certificate` and :meth:`slope_bounds`, the range of the
    logarithmic derivative ``d log phi / d log r`` over an interval.
    """

    family: ClassVar[str] = "abstract"
    domain: ClassVar[tuple[float, float]] = (0.0, math.inf)

    def log_phi(self, t):
        raise NotImplementedError

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(self.log_phi(np.log(r)))

    def params(self) -> dict:
        raise NotImplementedError

    def certificate(self) -> WeakScalingCertificate:
        raise NotImplementedError

    def slope_bounds(self, t_lo: float, t_hi: float) -> tuple[float, float]:
        """Bounds of ``d log phi / d log r`` for ``log r`` in ``[t_lo, t_hi]``
        (infinite ends allowed)."""
        raise NotImplementedError

    def tail_constants(self, t_lo: float, t_hi: float) -> tuple[float, float, float]:
        """``(a, s_lo, s_hi)`` with ``a^-1 (R/r)^s_lo <= phi(R)/phi(r) <= a (R/r)^s_hi``
        whenever ``t_lo <= log r <= log R <= t_hi``; defaults to exact slope
        bounds with a = 1."""
        s_lo, s_hi = self.slope_bounds(t_lo, t_hi)
        return 1.0, s_lo, s_hi

    @property
    def label(self) -> str:
        inner = ";".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{self.family}({inner})"


@dataclass(frozen=True)
class Power(ScalingFunction):
    """``phi(r) = r^sigma``, the fractional-Laplacian profile."""

    sigma: float
    family: ClassVar[str] = "power"

    def __post_init__(self):
        if not 0 < self.sigma < 2:
            raise ValueError(f"power exponent must lie in (0, 2), got {self.sigma}")

    def log_phi(self, t):
        return self.sigma * np.asarray(t, dtype=float)

    def params(self):
        return {"sigma": self.sigma}

    def certificate(self):
        return WeakScalingCertificate(1.0, self.sigma, self.sigma)

    def slope_bounds(self, t_lo, t_hi):
        return self.sigma, self.sigma


@dataclass(frozen=True)
class SumPowers(ScalingFunction):
    """``phi(r) = r^sigma_lower + r^sigma_upper``."""

    sigma_lower: float
    sigma_upper: float
    family: ClassVar[str] = "sumpowers"

    def __post_init__(self):
        if not 0 < self.sigma_lower <= self.sigma_upper < 2:
            raise ValueError("sumpowers needs 0 < sigma_lower <= sigma_upper < 2")

    def log_phi(self, t):
        t = np.asarray(t, dtype=float)
        return np.logaddexp(self.sigma_lower * t, self.sigma_upper * t)

    def params(self):
        return {"sigma_lower": self.sigma_lower, "sigma_upper": self.sigma_upper}

    def certificate(self):
        return WeakScalingCertificate(1.0, self.sigma_lower, self.sigma_upper)

    def _slope(self, t):
        # weighted mean of the two exponents, increasing in t
        d = self.sigma_upper - self.sigma_lower
        if d == 0:
            return np.full(np.shape(t), self.sigma_lower)
        w = 0.5 * (1.0 + np.tanh(0.5 * d * t))
        return self.sigma_lower + d * w

    def slope_bounds(self, t_lo, t_hi):
        return float(self._slope(t_lo)), float(self._slope(t_hi))


@dataclass(frozen=True)
class LogLower(ScalingFunction):
    """``phi(r) = r^sigma_lower * log(1 + r^-2)^(-(2 - sigma_upper)/2)``.

    Its logarithmic slope runs from ``sigma_lower`` (r -> 0) up to
    ``sigma_lower + 2 - sigma_upper`` (r -> inf), so ``sigma_lower <
    sigma_upper`` is required for the upper exponent to stay below 2.
    """

    sigma_lower: float
    sigma_upper: float
    family: ClassVar[str] = "loglower"

    def __post_init__(self):
        if not 0 < self.sigma_lower < self.sigma_upper < 2:
            raise ValueError("loglower needs 0 < sigma_lower < sigma_upper < 2")

    def log_phi(self, t):
        t = np.asarray(t, dtype=float)
        return self.sigma_lower * t - 0.5 * (2.0 - self.sigma_upper) * _log_L(t)

    def params(self):
        return {"sigma_lower": self.sigma_lower, "sigma_upper": self.sigma_upper}

    def certificate(self):
        return WeakScalingCertificate(
            1.0, self.sigma_lower, self.sigma_lower + 2.0 - self.sigma_upper
        )

    def slope_bounds(self, t_lo, t_hi):
        c = 2.0 - self.sigma_upper
        q_lo, q_hi = _q_bounds(t_lo, t_hi)
        return self.sigma_lower + c * q_lo, self.sigma_lower + c * q_hi


@dataclass(frozen=True)
class LogUpper(ScalingFunction):
    """``phi(r) = r^sigma_upper * log(1 + r^-2)^(sigma_lower/2)``.

    Logarithmic slope runs from ``sigma_upper`` (r -> 0) down to
    ``sigma_upper - sigma_lower`` (r -> inf).
    """

    sigma_lower: float
    sigma_upper: float
    family: ClassVar[str] = "logupper"

    def __post_init__(self):
        if not 0 < self.sigma_lower < self.sigma_upper < 2:
            raise ValueError("logupper needs 0 < sigma_lower < sigma_upper < 2")

    def log_phi(self, t):
        t = np.asarray(t, dtype=float)
        return self.sigma_upper * t + 0.5 * self.sigma_lower * _log_L(t)

    def params(self):
        return {"sigma_lower": self.sigma_lower, "sigma_upper": self.sigma_upper}

    def certificate(self):
        return WeakScalingCertificate(
            1.0, self.sigma_upper - self.sigma_lower, self.sigma_upper
        )

    def slope_bounds(self, t_lo, t_hi):
        q_lo, q_hi = _q_bounds(t_lo, t_hi)
        return self.sigma_upper - self.sigma_lower * q_hi, self.sigma_upper - self.sigma_lower * q_lo


@dataclass(frozen=True)
class UserTable(ScalingFunction):
    """Tabulated ``phi`` with log-log piecewise-linear interpolation.

    Queries outside ``[r[0], r[-1]]`` raise ``ValueError``.  Beyond the table
    the moments rely on ``declared`` (or, when absent, on the a = 1
    certificate formed by the extreme segment slopes).
    """

    r: tuple
    phi: tuple
    declared: WeakScalingCertificate | None = None
    family: ClassVar[str] = "table"
    _lr: np.ndarray = field(init=False, repr=False, compare=False)
    _lp: np.ndarray = field(init=False, repr=False, compare=False)
    _slopes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        p = np.asarray(self.phi, dtype=float)
        if r.ndim != 1 or r.shape != p.shape or r.size < 2:
            raise ValueError("table needs two equally long columns with at least two rows")
        if np.any(r <= 0) or np.any(p <= 0):
            raise ValueError("table radii and values must be positive")
        if np.any(np.diff(r) <= 0):
            raise ValueError("table radii must be strictly increasing")
        object.__setattr__(self, "r", tuple(float(v) for v in r))
        object.__setattr__(self, "phi", tuple(float(v) for v in p))
        lr, lp = np.log(r), np.log(p)
        object.__setattr__(self, "_lr", lr)
        object.__setattr__(self, "_lp", lp)
        object.__setattr__(self, "_slopes", np.diff(lp) / np.diff(lr))
        cert = self.declared or self._segment_certificate()
        if cert.sigma_lower > self._slopes.min() + 1e-12 or cert.sigma_upper < self._slopes.max() - 1e-12:
            if cert.a == 1.0:
                raise ValueError("declared certificate contradicts the table slopes")

    def _segment_certificate(self):
        return WeakScalingCertificate(1.0, float(self._slopes.min()), float(self._slopes.max()))

    @property
    def domain(self):  # type: ignore[override]
        return (self.r[0], self.r[-1])

    def log_phi(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self._lr[0], self._lr[-1]
        if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
            raise ValueError("table query outside the tabulated range")
        return np.interp(t, self._lr, self._lp)

    def params(self):
        return {"rows": len(self.r), "r_min": self.r[0], "r_max": self.r[-1]}

    def certificate(self):
        return self.declared or self._segment_certificate()

    def slope_bounds(self, t_lo, t_hi):
        a_lo, a_hi = max(t_lo, self._lr[0]), min(t_hi, self._lr[-1])
        i0 = int(np.searchsorted(self._lr, a_lo, side="right")) - 1
        i1 = int(np.searchsorted(self._lr, a_hi, side="left"))
        i0 = min(max(i0, 0), self._slopes.size - 1)
        i1 = min(max(i1, i0 + 1), self._slopes.size)
        s = self._slopes[i0:i1]
        return float(s.min()), float(s.max())

    def tail_constants(self, t_lo, t_hi):
        if t_lo >= self._lr[0] - 1e-12 and t_hi <= self._lr[-1] + 1e-12:
            return super().tail_constants(t_lo, t_hi)
        c = self.certificate()
        return c.a, c.sigma_lower, c.sigma_upper


FAMILIES = {cls.family: cls for cls in (Power, SumPowers, LogLower, LogUpper, UserTable)}


def eval_phi(phi: ScalingFunction, r) -> np.ndarray | float:
    """Evaluate ``phi`` at positive radii, rejecting invalid queries."""
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("phi is only defined for r > 0")
    out = phi(arr)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class ScalingCheck:
    """Outcome of :func:`check_weak_scaling` on a sample of radius pairs."""

    violations: list
    pairs: int
    max_ratio: float
    a_needed: float
    sigma_lower_fit: float
    sigma_upper_fit: float

    @property
    def certified(self) -> bool:
        return not self.violations


def check_weak_scaling(
    phi: ScalingFunction,
    cert: WeakScalingCertificate,
    grid=None,
    rel: float = 1e-12,
) -> ScalingCheck:
    """Test the weak-scaling inequalities on every ordered pair of a grid.

    Parameters
    ----------
    phi : ScalingFunction
    cert : WeakScalingCertificate
    grid : array_like, optional
        Sample radii.  Defaults to 16 points per decade over the part of
        ``[1e-6, 1e6]`` inside the domain of ``phi``.
    rel : float
        Rounding allowance on the logarithmic comparison.

    Returns
    -------
    ScalingCheck
        Violating pairs ``(r, R)``, the smallest ``a`` that would make the
        given exponents valid on the sample, and the best a = 1 exponents.
    """
    if grid is None:
        lo, hi = phi.domain
        lo = max(lo, 1e-6)
        hi = min(hi, 1e6)
        grid = np.geomspace(lo, hi, int(round(16 * math.log10(hi / lo))) + 1)
    g = np.unique(np.asarray(grid, dtype=float))
    if g.size < 2:
        raise ValueError("grid needs at least two distinct radii")
    if g[-1] / g[0] < 1e6 * (1 - 1e-12):
        raise ValueError("grid ratios must span at least [1, 1e6]")
    t = np.log(g)
    lp = phi.log_phi(t)
    i, j = np.triu_indices(g.size, k=1)
    dt = t[j] - t[i]
    dl = lp[j] - lp[i]
    la = math.log(cert.a)
    slack = rel * (1.0 + np.abs(dl) + np.abs(dt))
    low_bad = dl < -la + cert.sigma_lower * dt - slack
    up_bad = dl > la + cert.sigma_upper * dt + slack
    bad = np.nonzero(low_bad | up_bad)[0]
    viol = [(float(g[i[k]]), float(g[j[k]])) for k in bad]
    excess = np.maximum(dl - cert.sigma_upper * dt, cert.sigma_lower * dt - dl)
    slope = dl / dt
    return ScalingCheck(
        violations=viol,
        pairs=int(dt.size),
        max_ratio=float(g[-1] / g[0]),
        a_needed=float(math.exp(max(0.0, float(excess.max())))),
        sigma_lower_fit=float(slope.min()),
        sigma_upper_fit=float(slope.max()),
    )


# ---------------------------------------------------------------- moments


@dataclass(frozen=True)
class MomentValue:
    """Enclosure ``[value - error, value + error]`` of a kernel moment at ``R``."""

    value: float
    error: float
    R: float

    @property
    def lo(self) -> float:
        return self.value - self.error

    @property
    def hi(self) -> float:
        return self.value + self.error


def _lower_remainder(phi: ScalingFunction, t0: float) -> tuple[float, float]:
    # int_0^{e^t0} r/phi dr from the slope bounds on (0, e^t0]
    a, s_lo, s_hi = phi.tail_constants(-math.inf, t0)
    e = math.exp(2.0 * t0 - float(phi.log_phi(t0)))
    return e / (a * (2.0 - s_lo)), a * e / (2.0 - s_hi)


def _upper_remainder(phi: ScalingFunction, t1: float) -> tuple[float, float]:
    # int_{e^t1}^inf dr/(r phi) from the slope bounds on [e^t1, inf)
    a, s_lo, s_hi = phi.tail_constants(t1, math.inf)
    e = math.exp(-float(phi.log_phi(t1)))
    return e / (a * s_hi), a * e / s_lo


def _spread(d_max: float) -> np.ndarray:
    # panel offsets 0, 1/4, 1/2, 1, 2, ... , d_max in the log variable
    k = max(int(math.ceil(math.log2(d_max))), 0)
    d = np.concatenate([[0.0, 0.25, 0.5], 2.0 ** np.arange(0, k + 1)])
    d = d[d < d_max * (1 - 1e-9)]
    return np.append(d, d_max)


def lower_moment(phi: ScalingFunction, R: float, tol: float = DEFAULT_TOL) -> MomentValue:
    """Enclosure of ``int_0^R r / phi(r) dr``.

    The integral is computed in ``t = log r`` on panels whose width doubles
    away from ``log R``.  The part below a cut ``t0`` is enclosed by the
    slope bounds of ``phi``; the cut moves down until the enclosure width
    is below a quarter of the tolerance.

    Raises
    ------
    ToleranceError
        If ``error <= tol * value`` cannot be reached.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    lo_dom, hi_dom = phi.domain
    if R > hi_dom * (1 + 1e-12) or R < lo_dom * (1 - 1e-12):
        raise ValueError("R outside the domain of phi")
    tR = math.log(R)
    t_floor = math.log(lo_dom) if lo_dom > 0 else -math.inf

    def f(t):
        return np.exp(2.0 * t - phi.log_phi(t))

    d = 16.0
    while True:
        t0 = max(tR - d, t_floor)
        r_lo, r_hi = _lower_remainder(phi, t0)
        rem, rem_err = 0.5 * (r_lo + r_hi), 0.5 * (r_hi - r_lo)
        if t0 < tR:
            edges = tR - _spread(tR - t0)[::-1]
            est = max(rem, float(f(np.array(tR))) * 1e-3)
            q = integrate(f, edges, rtol=1e-14, atol=tol * est * 1e-3)
            val, err = q.value + rem, q.error + rem_err
        else:
            val, err = rem, rem_err
        if err <= tol * val:
            return MomentValue(val, err, R)
        if t0 == t_floor or d > 4e6:
            raise ToleranceError("lower moment", achieved=err / val, requested=tol)
        d *= 4.0


def upper_moment(phi: ScalingFunction, R: float, tol: float = DEFAULT_TOL) -> MomentValue:
    """Enclosure of ``int_R^inf dr / (r phi(r))``; see :func:`lower_moment`."""
    if not R > 0:
        raise ValueError("R must be positive")
    lo_dom, hi_dom = phi.domain
    if R > hi_dom * (1 + 1e-12) or R < lo_dom * (1 - 1e-12):
        raise ValueError("R outside the domain of phi")
    tR = math.log(R)
    t_ceil = math.log(hi_dom) if math.isfinite(hi_dom) else math.inf

    def f(t):
        return np.exp(-phi.log_phi(t))

    d = 16.0
    while True:
        t1 = min(tR + d, t_ceil)
        r_lo, r_hi = _upper_remainder(phi, t1)
        rem, rem_err = 0.5 * (r_lo + r_hi), 0.5 * (r_hi - r_lo)
        if t1 > tR:
            edges = tR + _spread(t1 - tR)
            est = max(rem, float(f(np.array(tR))) * 1e-3)
            q = integrate(f, edges, rtol=1e-14, atol=tol * est * 1e-3)
            val, err = q.value + rem, q.error + rem_err
        else:
            val, err = rem, rem_err
        if err <= tol * val:
            return MomentValue(val, err, R)
        if t1 == t_ceil or d > 4e6:
            raise ToleranceError("upper moment", achieved=err / val, requested=tol)
        d *= 4.0


# ---------------------------------------------------------------- moment inequalities


@dataclass(frozen=True)
class MomentInequalities:
    """Pass flags and margins of the three moment inequalities at ``(R, t)``.

    Margins are ``bound - quantity`` in the direction of the inequality,
    widened by the enclosure; a flag is true when its margin is >= 0.
    """

    R: float
    t: float
    lower_bracket: bool
    upper_bracket: bool
    ratio_bound: bool
    margins: tuple

    @property
    def passed(self) -> bool:
        return self.lower_bracket and self.upper_bracket and self.ratio_bound


def moment_inequalities(
    phi: ScalingFunction,
    cert: WeakScalingCertificate,
    R: float,
    t: float,
    tol: float = DEFAULT_TOL,
) -> MomentInequalities:
    """Check the moment bracketing and ratio inequalities implied by ``cert``.

    (i)   ``R^2/(a(2-sl) phi(R)) <= lower(R) <= a R^2/((2-su) phi(R))``
    (ii)  ``1/(a su phi(R)) <= upper(R) <= a/(sl phi(R))``
    (iii) ``lower(R)/lower(tR) <= 1 + a^2 t^(sl - 2)``

    A relative rounding slack of 1e-13 is allowed so that the exact
    equalities of the power family do not fail on the last bit.
    """
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    a, sl, su = cert.a, cert.sigma_lower, cert.sigma_upper
    lo = lower_moment(phi, R, tol)
    up = upper_moment(phi, R, tol)
    lo_t = lower_moment(phi, t * R, tol)
    pR = float(phi(R))
    slack = 1e-13
    b1 = (R * R / (a * (2 - sl) * pR), a * R * R / ((2 - su) * pR))
    b2 = (1.0 / (a * su * pR), a / (sl * pR))
    m1 = min(lo.hi - b1[0] + slack * lo.value, b1[1] - lo.lo + slack * lo.value)
    m2 = min(up.hi - b2[0] + slack * up.value, b2[1] - up.lo + slack * up.value)
    ratio = lo.value / lo_t.value
    ratio_err = ratio * (lo.error / lo.value + lo_t.error / lo_t.value)
    bound = 1.0 + a * a * t ** (sl - 2.0)
    m3 = bound - (ratio - ratio_err) + slack * ratio
    return MomentInequalities(R, t, m1 >= 0, m2 >= 0, m3 >= 0, (m1, m2, m3))


@dataclass(frozen=True)
class RhsScale:
    """Right-hand-side scale of the regularity estimates at radius ``R``.

    Attributes
    ----------
    scale : float
        ``(lower(1) + upper(1)) R^2 / lower(R)``.
    local : float
        ``(lower(R) + upper(R)) R^2 / lower(R)``.
    factor : float
        ``scale / local``, the empirical value of the dimension constant
        that links the two.
    bound : float
        ``R^2 + 2 a^2 / sigma0``, the certificate-only bound on ``local``.
    """

    R: float
    scale: float
    local: float
    factor: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.local <= self.bound * (1 + 1e-12)


def rhs_scale(
    phi: ScalingFunction,
    R: float,
    n: int,
    cert: WeakScalingCertificate | None = None,
    tol: float = DEFAULT_TOL,
) -> RhsScale:
    """Scale factor multiplying the source term in the regularity estimates.

    ``n`` enters only through the dimension constant, which is reported
    empirically (``factor``) rather than asserted.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    cert = cert or phi.certificate()
    l1, u1 = lower_moment(phi, 1.0, tol).value, upper_moment(phi, 1.0, tol).value
    lR, uR = lower_moment(phi, R, tol).value, upper_moment(phi, R, tol).value
    scale = (l1 + u1) * R * R / lR
    local = (lR + uR) * R * R / lR
    bound = R * R + 2 * cert.a**2 / cert.sigma0
    return RhsScale(R, scale, local, scale / local, bound)


# ---------------------------------------------------------------- config


def kernel_from_mapping(cfg: Mapping[str, str], base_dir: Path | None = None):
    """Build ``(phi, cert)`` from the flat key-value kernel description.

    Recognised keys: ``family``, ``sigma``, ``sigma_lower``, ``sigma_upper``,
    ``a``, ``sigma0`` and ``table`` (a two-column text file of r, phi).
    When ``a`` or any exponent is given explicitly the certificate is built
    from those values; otherwise the family's own certificate is used.
    """
    fam = cfg.get("family", "power").strip().lower()
    if fam not in FAMILIES:
        raise ConfigError(f"unknown family {fam!r}; expected one of {sorted(FAMILIES)}")

    def num(key, default=None):
        if key not in cfg:
            if default is None:
                raise ConfigError(f"family {fam!r} needs key {key!r}")
            return default
        try:
            return float(cfg[key])
        except ValueError:
            raise ConfigError(f"key {key!r} is not a number: {cfg[key]!r}") from None

    try:
        if fam == "power":
            phi = Power(num("sigma"))
        elif fam == "table":
            if "table" not in cfg:
                raise ConfigError("family 'table' needs key 'table'")
            path = Path(cfg["table"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            try:
                data = np.loadtxt(path, delimiter=None if path.suffix != ".csv" else ",", ndmin=2)
            except OSError as exc:
                raise ConfigError(f"cannot read table {path}: {exc}") from None
            phi = UserTable(tuple(data[:, 0]), tuple(data[:, 1]))
        else:
            phi = FAMILIES[fam](num("sigma_lower"), num("sigma_upper"))
        own = phi.certificate()
        explicit = any(k in cfg for k in ("a",)) or (
            fam == "power" and any(k in cfg for k in ("sigma_lower", "sigma_upper"))
        )
        if explicit:
            cert = WeakScalingCertificate(
                num("a", own.a),
                num("sigma_lower", own.sigma_lower) if fam == "power" else own.sigma_lower,
                num("sigma_upper", own.sigma_upper) if fam == "power" else own.sigma_upper,
                num("sigma0", own.sigma_lower),
            )
        else:
            cert = WeakScalingCertificate(own.a, own.sigma_lower, own.sigma_upper, num("sigma0", own.sigma_lower))
        if fam == "table" and explicit:
            phi = UserTable(phi.r, phi.phi, declared=cert)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return phi, cert
