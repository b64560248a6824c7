"""Composite Gauss-Legendre quadrature with panel-level error bookkeeping.

The integrators here are deliberately small: every caller supplies the
panel edges (dyadic shells, breakpoints of kinks, oscillation blocks), and
the routines only bisect panels whose embedded error estimate is too large.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

EPS = np.finfo(float).eps


@lru_cache(maxsize=None)
def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_sums(f: Callable, a: np.ndarray, b: np.ndarray, m: int) -> np.ndarray:
    """Apply the m-point rule on each panel [a_i, b_i].

    ``f`` receives an array of shape (P, m) and returns either the same
    shape or (k, P, m) for a vector-valued integrand.  The result has shape
    (P,) or (k, P).
    """
    x, w = gauss_legendre(m)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    t = (0.5 * (a + b))[:, None] + half[:, None] * x
    y = np.asarray(f(t), dtype=float)
    return (y * w).sum(axis=-1) * half


@dataclass(frozen=True)
class QuadResult:
    """Value and error bound of a composite quadrature.

    For vector-valued integrands ``value`` and ``error`` are arrays with one
    entry per component.
    """

    value: float | np.ndarray
    error: float | np.ndarray
    panels: int


def integrate(
    f: Callable,
    edges,
    rtol: float = 1e-13,
    atol: float = 0.0,
    high: int = 16,
    low: int = 8,
    max_panels: int = 200_000,
) -> QuadResult:
    """Adaptive composite Gauss-Legendre quadrature over the given panels.

    Each panel is accepted when ``|G_high - G_low| <= max(rtol |G_high|,
    atol)`` for the leading component, otherwise it is bisected.  The returned error is the sum of the accepted panel
    differences plus a rounding allowance.

    Parameters
    ----------
    f : callable
        Vectorised integrand, see :func:`panel_sums`.
    edges : array_like
        Increasing panel boundaries.
    rtol, atol : float
        Per-panel relative and absolute acceptance thresholds.
    high, low : int
        Orders of the embedded pair of rules.
    max_panels : int
        Bisection budget; panels still unresolved when it is exhausted are
        accepted with their (large) error estimates.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two panel edges")
    if np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    a, b = edges[:-1], edges[1:]
    acc_a: list[np.ndarray] = []
    acc_v: list[np.ndarray] = []
    acc_e: list[np.ndarray] = []
    acc_abs: list[np.ndarray] = []
    used = 0
    while a.size:
        vh = panel_sums(f, a, b, high)
        vl = panel_sums(f, a, b, low)
        vector = vh.ndim == 2
        diff = np.abs(vh - vl)
        lead_d = diff[0] if vector else diff
        lead_v = vh[0] if vector else vh
        thresh = np.maximum(rtol * np.abs(lead_v), atol)
        # panels at the resolution limit of doubles cannot be split further
        tiny = (b - a) <= 64 * EPS * np.maximum(np.abs(a), np.abs(b))
        used += a.size
        ok = (lead_d <= thresh) | tiny | (used >= max_panels)
        sel = np.nonzero(ok)[0]
        acc_a.append(a[sel])
        acc_v.append(vh[..., sel])
        acc_e.append(diff[..., sel])
        acc_abs.append(np.abs(vh[..., sel]))
        bad = ~ok
        if not bad.any():
            break
        ab, bb = a[bad], b[bad]
        mid = 0.5 * (ab + bb)
        a = np.concatenate([ab, mid])
        b = np.concatenate([mid, bb])
    left = np.concatenate(acc_a)
    order = np.argsort(left, kind="stable")
    vals = np.concatenate(acc_v, axis=-1)[..., order]
    errs = np.concatenate(acc_e, axis=-1)[..., order]
    mags = np.concatenate(acc_abs, axis=-1)[..., order]
    if vals.ndim == 2:
        value = np.array([math.fsum(row) for row in vals])
        error = np.array([math.fsum(row) for row in errs]) + 16 * EPS * mags.sum(axis=-1)
    else:
        value = math.fsum(vals)
        error = math.fsum(errs) + 16 * EPS * float(mags.sum())
    return QuadResult(value=value, error=error, panels=int(left.size))


def fixed_panels(f: Callable, edges, high: int = 16, low: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Per-panel values and embedded error estimates, without refinement."""
    edges = np.asarray(edges, dtype=float)
    vh = panel_sums(f, edges[:-1], edges[1:], high)
    vl = panel_sums(f, edges[:-1], edges[1:], low)
    return vh, np.abs(vh - vl)


def averaged_partial_sums(blocks) -> tuple[float, float]:
    """Limit of an alternating series of block integrals.

    Partial sums of an alternating series with slowly decaying terms are
    averaged pairwise repeatedly (an Euler-type transform).  The last two
    averaged values bracket the limit for the completely monotone block
    sequences met here; their difference is returned as the error.

    Parameters
    ----------
    blocks : array_like
        Consecutive block integrals, at least three of them.

    Returns
    -------
    value, error : float
    """
    s = np.cumsum(np.asarray(blocks, dtype=float))
    if s.size < 3:
        raise ValueError("need at least three blocks")
    prev = s
    while s.size > 1:
        prev = s
        s = 0.5 * (s[:-1] + s[1:])
    err = abs(prev[0] - prev[1]) + 16 * EPS * float(np.abs(blocks).sum())
    return float(s[0]), float(err)


def dyadic_edges(lo: float, hi: float, ratio: float = 2.0) -> np.ndarray:
    """Geometric panel edges from ``lo`` to ``hi`` (both included)."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    k = int(math.ceil(math.log(hi / lo) / math.log(ratio) - 1e-12))
    k = max(k, 1)
    e = lo * ratio ** np.arange(k + 1, dtype=float)
    e[-1] = hi
    return np.unique(e)


def merge_edges(*groups, rel: float = 1e-12) -> np.ndarray:
    """Union of sorted edge sets, dropping near-duplicates."""
    e = np.unique(np.concatenate([np.atleast_1d(np.asarray(g, dtype=float)) for g in groups]))
    if e.size < 2:
        return e
    keep = np.ones(e.size, dtype=bool)
    keep[1:] = np.diff(e) > rel * np.maximum(np.abs(e[1:]), 1e-300)
    return e[keep]
