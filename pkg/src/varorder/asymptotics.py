"""Limits of normalised quantities along kernel sequences whose exponents
tend to 2 or to 0.

As the order tends to 2, ``C_phi * lower(R)`` tends to ``2 / omega_n`` and
the normalised operator tends to the Laplacian; as it tends to 0,
``C_phi * upper(R)`` tends to ``1 / (n omega_n)`` and the operator tends to
minus the identity.  The sweeps here record the values along a sequence
without extrapolating.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .functions import PointFunction
from .kernel import Power, ScalingFunction, SumPowers, WeakScalingCertificate, lower_moment, upper_moment
from .normalizer import ball_volume, cphi_direct, cphi_power_closed_form
from .operator import linear_apply

TARGETS = ("to-2", "to-0")


@dataclass(frozen=True)
class KernelSequence:
    """Indexed kernels ``k -> phi_k`` with certificates and a limit target."""

    name: str
    target: str
    build: Callable[[int], ScalingFunction]

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")

    def __call__(self, k: int) -> ScalingFunction:
        return self.build(k)

    def certificate(self, k: int) -> WeakScalingCertificate:
        return self.build(k).certificate()


def power_sequence(target: str) -> KernelSequence:
    """``r^(2 - 2^-k)`` or ``r^(2^-k)``."""
    if target == "to-2":
        return KernelSequence("power", target, lambda k: Power(2.0 - 2.0**-k))
    return KernelSequence("power", target, lambda k: Power(2.0**-k))


def perturbed_sequence(target: str) -> KernelSequence:
    """Two-exponent sums whose exponents merge as they approach the limit.

    Toward 2 the exponents are ``2 - 2^(1-k)`` and ``2 - 2^-k``; toward 0 they
    are ``2^-k`` and ``2^(1-k)`` so that the lower one stays positive.
    """
    if target == "to-2":
        return KernelSequence("sumpowers", target, lambda k: SumPowers(2.0 - 2.0 ** (1 - k), 2.0 - 2.0**-k))
    return KernelSequence("sumpowers", target, lambda k: SumPowers(2.0**-k, 2.0 ** (1 - k)))


SEQUENCES = {"power": power_sequence, "sumpowers": perturbed_sequence}


@dataclass
class LimitSweepReport:
    """Per-index values of a limit sweep.

    ``deviations`` are relative to the target (absolute when the target is 0).
    """

    label: str
    ks: list = field(default_factory=list)
    values: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    threshold: float = 0.01

    @property
    def deviations(self) -> np.ndarray:
        v = np.asarray(self.values)
        t = np.asarray(self.targets)
        scale = np.where(t != 0, np.abs(t), 1.0)
        return np.abs(v - t) / scale

    @property
    def final_deviation(self) -> float:
        return float(self.deviations[-1])

    @property
    def passed(self) -> bool:
        return self.final_deviation < self.threshold

    def tail_monotone(self, last: int = 4) -> bool:
        d = self.deviations[-last:]
        return bool(np.all(np.diff(d) <= 0))

    def rows(self):
        for k, v, t, d in zip(self.ks, self.values, self.targets, self.deviations):
            yield k, v, t, float(d)


def lower_target(n: int) -> float:
    return 2.0 / ball_volume(n)


def upper_target(n: int) -> float:
    return 1.0 / (n * ball_volume(n))


def limit_product_lower(
    seq: KernelSequence, n: int, R: float = 1.0, ks=range(1, 13), tol: float = 1e-10
) -> LimitSweepReport:
    """``C_{phi_k} lower_k(R)`` along a sequence tending to order 2."""
    if seq.target != "to-2":
        raise ValueError("the lower-moment limit needs a sequence tending to 2")
    rep = LimitSweepReport(f"{seq.name}:lower:n={n}:R={R}", threshold=0.01)
    for k in ks:
        phi = seq(k)
        C = cphi_direct(phi, n, tol)
        m = lower_moment(phi, R)
        rep.ks.append(k)
        rep.values.append(C.value * m.value)
        rep.errors.append(C.error * m.value + C.value * m.error)
        rep.targets.append(lower_target(n))
    return rep


def limit_product_upper(
    seq: KernelSequence, n: int, R: float = 1.0, ks=range(1, 13), tol: float = 1e-10
) -> LimitSweepReport:
    """``C_{phi_k} upper_k(R)`` along a sequence tending to order 0."""
    if seq.target != "to-0":
        raise ValueError("the upper-moment limit needs a sequence tending to 0")
    rep = LimitSweepReport(f"{seq.name}:upper:n={n}:R={R}", threshold=0.01)
    for k in ks:
        phi = seq(k)
        C = cphi_direct(phi, n, tol)
        m = upper_moment(phi, R)
        rep.ks.append(k)
        rep.values.append(C.value * m.value)
        rep.errors.append(C.error * m.value + C.value * m.error)
        rep.targets.append(upper_target(n))
    return rep


def operator_limit(
    seq: KernelSequence, u: PointFunction, points, ks=range(1, 13), tol: float = 1e-6
) -> list[LimitSweepReport]:
    """``-L_k u(x)`` (normalised with ``C/2``) at each point along the sequence.

    The target is ``-Laplacian u(x)`` toward order 2 and ``u(x)`` toward 0.
    One report per point.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != u.n:
        pts = pts.reshape(-1, u.n)
    reports = []
    for x in pts:
        if seq.target == "to-2":
            target = -float(np.trace(u.hessian(x)))
        else:
            target = float(u(x))
        rep = LimitSweepReport(f"{seq.name}:{u.name}:x={x.tolist()}", threshold=0.02)
        for k in ks:
            phi = seq(k)
            C = cphi_direct(phi, u.n, 1e-10)
            v = linear_apply(u, x, phi, tol, cphi=C)
            rep.ks.append(k)
            rep.values.append(-v.value)
            rep.errors.append(v.error)
            rep.targets.append(target)
        reports.append(rep)
    return reports


def power_oracle_lower(n: int, sigma: float, R: float = 1.0) -> float:
    """``C(n, sigma) R^(2 - sigma) / (2 - sigma)`` for a pure power."""
    return cphi_power_closed_form(n, sigma) * R ** (2 - sigma) / (2 - sigma)


def power_oracle_upper(n: int, sigma: float, R: float = 1.0) -> float:
    """``C(n, sigma) R^-sigma / sigma`` for a pure power."""
    return cphi_power_closed_form(n, sigma) * R**-sigma / sigma

