"""Acceptance suite: one PASS/FAIL line per criterion.

The verdict lines are printed live with ``-s`` and repeated in an
"acceptance" section at the end of every pytest run that includes this file.
"""
import itertools
import math
import sys
import time

import numpy as np
import pytest

from varorder.asymptotics import (
    limit_product_lower,
    limit_product_upper,
    lower_target,
    operator_limit,
    power_sequence,
    upper_target,
)
from varorder.barrier import (
    capped_barrier_build,
    find_kappa0,
    p_constraints_hold,
    select_p,
    verify_capped,
)
from varorder.cli import main
from varorder.functions import bump, cos_x1
from varorder.harnack_lab import STABILITY, UNIFORMITY_FACTOR, family_kernels, harnack_sweep
from varorder.kernel import LogLower, LogUpper, Power, SumPowers, moment_inequalities
from varorder.normalizer import GammaOracle, bound_check, cphi_direct, cphi_reduced
from varorder.operator import linear_apply

FAMILIES = [Power(1.0), SumPowers(0.5, 1.5), LogLower(1.0, 1.5), LogUpper(0.5, 1.5)]


VERDICTS: dict[int, str] = {}


def _emit(num, ok, detail):
    # also collected for the terminal summary (see conftest.py)
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}"
    VERDICTS[num] = line
    print(line)
    return line


class _Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.dt = time.perf_counter() - self.t0


def _gamma_closed_form(n, s):
    G = GammaOracle.gamma
    return 2.0**s * G((n + s) / 2) / (math.pi ** (n / 2) * abs(G(-s / 2)))


def test_1_fractional_constant():
    with _Clock() as c:
        worst = 0.0
        for n, s in itertools.product((1, 2, 3), (0.3, 1.0, 1.7)):
            ref = _gamma_closed_form(n, s)
            worst = max(worst, abs(cphi_direct(Power(s), n).value / ref - 1))
    ok = worst <= 1e-6 and c.dt <= 10
    _emit(1, ok, f"max relative deviation {worst:.2e} (<= 1e-6), {c.dt:.1f}s (<= 10s)")
    assert ok


def test_2_route_agreement():
    cases = [
        (Power(0.7), 2),
        (SumPowers(0.5, 1.5), 1),
        (SumPowers(0.5, 1.5), 3),
        (LogLower(1.0, 1.5), 2),
        (LogLower(1.0, 1.5), 3),
        (LogUpper(0.5, 1.5), 2),
    ]
    with _Clock() as c:
        worst = 0.0
        for phi, n in cases:
            a, b = cphi_direct(phi, n), cphi_reduced(phi, n)
            worst = max(worst, abs(a.value - b.value) / (a.error + b.error))
    ok = worst <= 1.0 and c.dt <= 60
    _emit(2, ok, f"max |direct - reduced| / combined enclosure {worst:.2f} (<= 1) on 6 cases, {c.dt:.1f}s (<= 60s)")
    assert ok


def test_3_asymptotics_to_two():
    with _Clock() as c:
        devs = [limit_product_lower(power_sequence("to-2"), n, 1.0, [10]).final_deviation for n in (1, 2)]
    ok = max(devs) < 0.01 and c.dt <= 30
    _emit(3, ok, f"deviation from 2/|B_1| at k=10: {max(devs):.2e} (< 1e-2), {c.dt:.1f}s (<= 30s)")
    assert ok


def test_4_asymptotics_to_zero():
    with _Clock() as c:
        devs = [limit_product_upper(power_sequence("to-0"), n, 1.0, [10]).final_deviation for n in (1, 2)]
    ok = max(devs) < 0.01 and c.dt <= 30
    _emit(4, ok, f"deviation from 1/(n|B_1|) at k=10: {max(devs):.2e} (< 1e-2), {c.dt:.1f}s (<= 30s)")
    assert ok


def test_5_operator_limits():
    with _Clock() as c:
        devs = []
        for target, n in itertools.product(("to-2", "to-0"), (1, 2)):
            (rep,) = operator_limit(power_sequence(target), bump(n), np.zeros((1, n)), ks=[10])
            expect = 8.0 * n if target == "to-2" else 1.0
            assert rep.targets[-1] == expect
            devs.append(rep.final_deviation)
    ok = max(devs) < 0.02 and c.dt <= 60
    _emit(5, ok, f"bump at 0, max deviation from 8n / 1 at k=10: {max(devs):.2e} (< 2e-2), {c.dt:.1f}s (<= 60s)")
    assert ok


def test_6_defining_identity():
    with _Clock() as c:
        worst = 0.0
        for phi, n in itertools.product(FAMILIES, (1, 2)):
            v = linear_apply(cos_x1(n), np.zeros(n), phi)
            worst = max(worst, abs(v.value + 1.0) - v.error)
    ok = worst <= 0 and c.dt <= 10
    _emit(6, ok, f"cos at 0 gives -1 within enclosure for all families, n=1,2 (worst excess {worst:.1e}), {c.dt:.1f}s (<= 10s)")
    assert ok


def test_7_weak_scaling_inequalities():
    rng = np.random.default_rng(2024)
    pool = FAMILIES + [Power(0.3), Power(1.8), SumPowers(0.2, 1.9), LogLower(0.4, 1.2), LogUpper(0.3, 1.8)]
    with _Clock() as c:
        fails = 0
        for _ in range(240):
            phi = pool[rng.integers(len(pool))]
            R = float(np.exp(rng.uniform(math.log(1e-3), math.log(1e3))))
            t = float(rng.uniform(0.01, 0.99))
            fails += not moment_inequalities(phi, phi.certificate(), R, t).passed
    ok = fails == 0 and c.dt <= 30
    _emit(7, ok, f"240 random (family, R, t) cases, {fails} failures, {c.dt:.1f}s (<= 30s)")
    assert ok


def test_8_bound_envelope():
    # the lower side is uniform in R, the upper side is only stated at R = 1
    radii = np.geomspace(1e-3, 1e3, 25)
    with _Clock() as c:
        margins, c2 = [], []
        ok = True
        for phi in FAMILIES:
            rep = bound_check(phi, phi.certificate(), 1, radii)
            ok &= rep.passed and math.isfinite(rep.rho_max)
            margins.append(rep.rho_min / rep.c1)
            c2.append(rep.rho_at_one / rep.a)
    ok = ok and c.dt <= 60
    _emit(
        8,
        ok,
        f"min rho / floor {min(margins):.2f} (>= 1) over R in [1e-3, 1e3], "
        f"empirical upper constant at R=1 in [{min(c2):.3f}, {max(c2):.3f}], {c.dt:.1f}s (<= 60s)",
    )
    assert ok


def test_9_barrier():
    with _Clock() as c:
        tight = all(
            p_constraints_hold(n, lam, Lam, select_p(n, lam, Lam))
            and not p_constraints_hold(n, lam, Lam, 0.99 * select_p(n, lam, Lam))
            for n, lam, Lam in [(1, 1.0, 1.0), (2, 1.0, 2.0), (3, 0.5, 1.0)]
        )
        searches = [
            find_kappa0(Power(1.0), 1, 1.0, 1.0, 0.5),
            find_kappa0(SumPowers(0.5, 1.5), 2, 1.0, 2.0, 0.5),
        ]
        found = all(s.passed for s in searches)
        seams = []
        for s in searches:
            rep = verify_capped(capped_barrier_build(s.params))
            seams.append(rep.passed)
    ok = tight and found and all(seams) and c.dt <= 300
    k0 = ", ".join(f"{s.params.kappa0:g}" for s in searches)
    _emit(9, ok, f"select_p tight={tight}, kappa0 found and stable={found} ({k0}), capped invariants={all(seams)}, {c.dt:.1f}s (<= 300s)")
    assert ok


def test_10_harnack_uniformity():
    with _Clock() as c:
        summ = harnack_sweep(family_kernels("power", [0.5, 1.0, 1.5, 1.9]), 1.0, ("bump", "bump-right"))
    d = summ.as_dict()
    ok = (
        summ.passed
        and d["max_quotient_drift"] <= STABILITY
        and d["uniformity_ratio"] <= UNIFORMITY_FACTOR
        and c.dt <= 600
    )
    _emit(
        10,
        ok,
        f"quotient drift {d['max_quotient_drift']:.1e} (<= 5e-2), max/median C_emp {d['uniformity_ratio']:.2f} (<= 10), "
        f"eps > 0: {d['decay_positive']}, Hoelder drift {d['max_holder_drift']:.1e} (<= 1e-1), {c.dt:.1f}s (<= 600s)",
    )
    assert ok


def test_11_determinism(tmp_path):
    runs = {
        "bounds": ["--cases", "30", "--seed", "11"],
        "operator": ["--function", "quadratic-cap", "--points", "0;0.25;0.9"],
        "barrier": ["--samples", "8"],
        "harnack": ["--sigma-grid", "0.5,1.9", "--data", "bump,constant", "--h", "0.01"],
    }
    same = True
    for name, extra in runs.items():
        outs = []
        for rep in ("a", "b"):
            d = tmp_path / f"{name}-{rep}"
            assert main([name, "--out", str(d), *extra]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        same &= outs[0] == outs[1] and bool(outs[0])
    _emit(11, same, f"byte-identical artifacts over repeated runs of {', '.join(runs)}")
    assert same


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
