"""Batch command line front end.

Each subcommand resolves its settings (defaults, then ``--config`` file,
then flags), computes, and writes CSV/JSON artifacts into ``--out``.  Every
artifact carries the tool version, the seed and the resolved settings.

Exit status: 0 when every asserted property holds, 2 for configuration
errors, 3 when a tolerance cannot be met, 4 when a property fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, PropertyFailure, ToleranceError
from .config import RunConfig, load_config

EXIT_OK, EXIT_CONFIG, EXIT_TOL, EXIT_PROPERTY = 0, 2, 3, 4
TOOL = f"varorder {__version__}"
OPERATOR_FUNCTIONS = ("cos", "bump", "quadratic-cap", "w_R", "barrier")


# ---------------------------------------------------------------- artifacts


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    return v


class Artifacts:
    """Collects output files and writes them only once the run has finished."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.files: dict[str, str] = {}
        self.figures: list = []

    def _header(self) -> list[str]:
        conf = "; ".join(f"{k}={v}" for k, v in self.cfg.resolved().items())
        return [f"# tool: {TOOL}", f"# seed: {self.cfg.seed}", f"# config: {conf}"]

    def csv(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        buf.write("\n".join(self._header()) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        self.files[name] = buf.getvalue()

    def json(self, name: str, payload: dict) -> None:
        body = {"tool": TOOL, "seed": self.cfg.seed, "config": self.cfg.resolved()}
        body.update(payload)
        self.files[name] = json.dumps(_jsonable(body), indent=2, allow_nan=False) + "\n"

    def figure(self, name: str, fn, *args) -> None:
        self.figures.append((name, fn, args))

    def flush(self) -> list[Path]:
        out = self.cfg.out
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.files.items():
            p = out / name
            p.write_text(text)
            written.append(p)
        if self.cfg.plot and self.figures:
            from . import plotting

            for name, fn, args in self.figures:
                written.append(getattr(plotting, fn)(*args, out / name))
        return written


# ---------------------------------------------------------------- helpers


def _kernel(cfg: RunConfig):
    from .kernel import kernel_from_mapping

    return kernel_from_mapping(cfg.kernel_mapping(), cfg.base_dir)


def _points(cfg: RunConfig, n: int) -> np.ndarray:
    raw = cfg.get("points", "0")
    try:
        pts = [[float(c) for c in p.split(",")] for p in raw.split(";") if p.strip()]
    except ValueError:
        raise ConfigError(f"points must look like '0,0;0.5,0', got {raw!r}") from None
    if n == 1 and all(len(p) == 1 for p in pts):
        return np.array(pts)
    if any(len(p) != n for p in pts):
        raise ConfigError(f"every point needs {n} coordinates")
    return np.array(pts)


def _check_n(n: int) -> int:
    if n < 1:
        raise ConfigError("dimension must be >= 1")
    return n


# ---------------------------------------------------------------- subcommands


def run_constant(cfg: RunConfig, art: Artifacts) -> int:
    from .normalizer import cphi

    phi, _ = _kernel(cfg)
    n = _check_n(cfg.integer("n"))
    method = cfg.get("method", "direct")
    if method not in ("direct", "reduced"):
        raise ConfigError("method must be direct or reduced")
    res = cphi(phi, n, cfg.tol, method)
    art.json("constant.json", {"cphi": res.value, "err": res.error, "method": res.method, "n": n, "kernel": phi.label})
    print(json.dumps({"cphi": res.value, "err": res.error, "method": res.method, "n": n}))
    return EXIT_OK


def _radii(cfg: RunConfig, phi) -> np.ndarray:
    if "R" in cfg.values:
        return np.array(cfg.numbers("R"))
    lo, hi = cfg.number("R_min"), cfg.number("R_max")
    dlo, dhi = phi.domain
    lo, hi = max(lo, dlo), min(hi, dhi)
    if not 0 < lo < hi:
        raise ConfigError("radius range is empty inside the kernel's domain")
    return np.geomspace(lo, hi, cfg.integer("count"))


def run_moments(cfg: RunConfig, art: Artifacts) -> int:
    from .kernel import lower_moment, upper_moment

    phi, _ = _kernel(cfg)
    params = ";".join(f"{k}={_fmt(v)}" for k, v in phi.params().items())
    rows = []
    for R in _radii(cfg, phi):
        lo = lower_moment(phi, float(R), cfg.tol)
        up = upper_moment(phi, float(R), cfg.tol)
        rows.append({"R": float(R), "lowerC": lo.value, "lowerC_err": lo.error, "upperC": up.value, "upperC_err": up.error})
    header = ["family", "params", "R", "lowerC", "lowerC_err", "upperC", "upperC_err"]
    art.csv("moments.csv", header, [[phi.family, params] + [r[h] for h in header[2:]] for r in rows])
    art.figure("moments.png", "moments_figure", rows)
    print(f"moments: {len(rows)} radii written")
    return EXIT_OK


def run_bounds(cfg: RunConfig, art: Artifacts) -> int:
    from .kernel import check_weak_scaling, moment_inequalities
    from .normalizer import bound_check

    phi, cert = _kernel(cfg)
    n = _check_n(cfg.integer("n"))
    rng = np.random.default_rng(cfg.seed)
    lo, hi = max(cfg.number("R_min"), phi.domain[0]), min(cfg.number("R_max"), phi.domain[1])
    cases = cfg.integer("cases")
    rows, ok = [], True
    for _ in range(cases):
        R = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        t = float(rng.uniform(0.01, 0.99))
        if t * R < phi.domain[0]:
            t = min(0.99, 2 * phi.domain[0] / R)
        m = moment_inequalities(phi, cert, R, t, min(cfg.tol, 1e-10))
        ok &= m.passed
        rows.append([R, t, m.lower_bracket, m.upper_bracket, m.ratio_bound, *m.margins])
    art.csv(
        "bounds.csv",
        ["R", "t", "lower_bracket", "upper_bracket", "ratio_bound", "margin_lower", "margin_upper", "margin_ratio"],
        rows,
    )
    try:
        scan = check_weak_scaling(phi, cert)
        scan_info = {
            "pairs": scan.pairs,
            "violations": len(scan.violations),
            "a_needed": scan.a_needed,
            "sigma_lower_fit": scan.sigma_lower_fit,
            "sigma_upper_fit": scan.sigma_upper_fit,
        }
        ok &= scan.certified
    except ValueError as exc:  # table too short for the ratio span
        scan_info = {"skipped": str(exc)}
    radii = np.geomspace(lo, hi, cfg.integer("count"))
    env = bound_check(phi, cert, n, radii)
    ok &= env.passed
    art.csv("envelope.csv", ["R", "rho", "rho_err"], zip(env.radii, env.rho, env.rho_err))
    art.json(
        "bounds.json",
        {
            "kernel": phi.label,
            "n": n,
            "certificate": {"a": cert.a, "sigma_lower": cert.sigma_lower, "sigma_upper": cert.sigma_upper, "sigma0": cert.sigma0},
            "inequality_cases": cases,
            "inequality_failures": sum(1 for r in rows if not (r[2] and r[3] and r[4])),
            "weak_scaling_scan": scan_info,
            "envelope": {"rho_min": env.rho_min, "rho_max": env.rho_max, "floor": env.c1, "rho_at_one": env.rho_at_one},
            "passed": bool(ok),
        },
    )
    art.figure("envelope.png", "envelope_figure", env.radii, env.rho, env.c1)
    print(f"bounds: {'pass' if ok else 'FAIL'} over {cases} cases")
    return EXIT_OK if ok else EXIT_PROPERTY


def run_asymptotics(cfg: RunConfig, art: Artifacts) -> int:
    from .asymptotics import SEQUENCES, limit_product_lower, limit_product_upper, operator_limit
    from .functions import bump

    target = cfg.get("target")
    if target not in ("to-2", "to-0"):
        raise ConfigError("target must be to-2 or to-0")
    name = cfg.get("sequence")
    if name not in SEQUENCES:
        raise ConfigError(f"sequence must be one of {sorted(SEQUENCES)}")
    n = _check_n(cfg.integer("n"))
    k0, k1 = cfg.integer("k_min"), cfg.integer("k_max")
    if not 1 <= k0 <= k1:
        raise ConfigError("need 1 <= k_min <= k_max")
    seq = SEQUENCES[name](target)
    ks = range(k0, k1 + 1)
    quantity = cfg.get("quantity", "moment")
    if quantity == "moment":
        fn = limit_product_lower if target == "to-2" else limit_product_upper
        rep = fn(seq, n, cfg.number("R"), ks)
    elif quantity == "operator":
        rep = operator_limit(seq, bump(n), np.zeros((1, n)), ks, cfg.tol)[0]
    else:
        raise ConfigError("quantity must be moment or operator")
    art.csv("asymptotics.csv", ["k", "value", "target", "deviation"], rep.rows())
    art.json(
        "asymptotics.json",
        {
            "label": rep.label,
            "final_deviation": rep.final_deviation,
            "threshold": rep.threshold,
            "tail_monotone": rep.tail_monotone(),
            "passed": rep.passed,
        },
    )
    art.figure("asymptotics.png", "asymptotics_figure", list(rep.ks), list(rep.deviations), rep.threshold, rep.label)
    print(f"asymptotics: final deviation {rep.final_deviation:.3e} ({'pass' if rep.passed else 'FAIL'})")
    return EXIT_OK if rep.passed else EXIT_PROPERTY


def _operator_function(cfg: RunConfig, n: int):
    from .barrier import select_p
    from .functions import BUILTINS, power_decay

    name = cfg.get("function")
    if name not in OPERATOR_FUNCTIONS:
        raise ConfigError(f"function must be one of {OPERATOR_FUNCTIONS}")
    if name == "barrier":
        lam, Lam = cfg.number("lam"), cfg.number("Lam")
        R = cfg.number("R", 1.0)
        k0 = cfg.number("kappa0", cfg.number("kappa1") / 16)
        return power_decay(n, select_p(n, lam, Lam), k0 * R)
    if name == "w_R":
        return BUILTINS[name](n, R=cfg.number("R", 4.0))
    if name == "quadratic-cap":
        return BUILTINS[name](n, radius=cfg.number("R", 1.0))
    return BUILTINS[name](n)


def run_operator(cfg: RunConfig, art: Artifacts) -> int:
    from .operator import ExtremalParams, linear_apply, pucci_minus, pucci_plus

    phi, _ = _kernel(cfg)
    n = _check_n(cfg.integer("n"))
    u = _operator_function(cfg, n)
    kind = cfg.get("operator", "linear")
    if kind not in ("linear", "plus", "minus"):
        raise ConfigError("operator must be linear, plus or minus")
    ext = ExtremalParams(cfg.number("lam"), cfg.number("Lam"))
    rows, labels = [], []
    for x in _points(cfg, n):
        if kind == "linear":
            v = linear_apply(u, x, phi, cfg.tol)
        elif kind == "plus":
            v = pucci_plus(u, x, phi, ext, cfg.tol)
        else:
            v = pucci_minus(u, x, phi, ext, cfg.tol)
        lab = ";".join(_fmt(float(c)) for c in x)
        labels.append(lab)
        # the pole-centred part is reported with the annulus
        rows.append([lab, v.value, v.error, v.inner, v.annulus + v.pole, v.tail])
    art.csv("operator.csv", ["x", "value", "err", "inner", "annulus", "tail"], rows)
    art.figure("operator.png", "operator_figure", labels, [r[1] for r in rows], [r[2] for r in rows])
    print(f"operator: {len(rows)} points written")
    return EXIT_OK


def run_barrier(cfg: RunConfig, art: Artifacts) -> int:
    from .barrier import capped_barrier_build, check_ring_radii, find_kappa0, p_constraints_hold, sphere_margin, verify_capped

    phi, cert = _kernel(cfg)
    n = _check_n(cfg.integer("n"))
    lam, Lam = cfg.number("lam"), cfg.number("Lam")
    R, kappa1 = cfg.number("R"), cfg.number("kappa1")
    search = find_kappa0(phi, n, lam, Lam, kappa1, R, cert=cert, samples=cfg.integer("samples"), tol=cfg.tol)
    p = search.params.p
    header = ["R0", "Mminus", "err", "I1", "I2plusI3"]
    art.csv("barrier_evidence.csv", header, [[r.R0, r.Mminus, r.err, r.I1, r.I2plusI3] for r in search.evidence])
    art.csv("barrier_recheck.csv", header, [[r.R0, r.Mminus, r.err, r.I1, r.I2plusI3] for r in search.recheck])
    payload = {
        "kernel": phi.label,
        "n": n,
        "lam": lam,
        "Lam": Lam,
        "p": p,
        "kappa0": search.params.kappa0 if search.found else None,
        "kappa1": kappa1,
        "p_constraints": p_constraints_hold(n, lam, Lam, p),
        "sphere_margin": sphere_margin(n, lam, Lam, p),
        "tried": [{"kappa0": k, "min_upper": m} for k, m in search.tried],
        "found": search.found,
        "stable": search.stable,
    }
    ok = search.passed and payload["p_constraints"]
    if search.found:
        rep = verify_capped(capped_barrier_build(search.params), seed=cfg.seed)
        payload["capped"] = {
            "seam_value_rel": rep.seam_value_rel,
            "seam_slope_rel": rep.seam_slope_rel,
            "min_on_three_quarters": rep.min_on_three_quarters,
            "outside_max": rep.outside_max,
            "pointwise_min_margin": rep.pointwise_min_margin,
            "pointwise_samples": rep.pointwise_samples,
            "passed": rep.passed,
        }
        rings = check_ring_radii(n, cert.sigma_lower, R)
        payload["ring_radii_ok"] = rings
        ok = ok and rep.passed and rings
    payload["passed"] = bool(ok)
    art.json("barrier.json", payload)
    ev = search.recheck or search.evidence
    art.figure("barrier.png", "barrier_figure", [r.R0 for r in ev], [r.Mminus for r in ev], [r.err for r in ev])
    print(f"barrier: p={p!r} kappa0={payload['kappa0']!r} ({'pass' if ok else 'FAIL'})")
    return EXIT_OK if ok else EXIT_PROPERTY


def run_harnack(cfg: RunConfig, art: Artifacts) -> int:
    from .harnack_lab import DATA_NAMES, family_kernels, harnack_sweep

    fam = cfg.get("family", "power")
    sig0 = cfg.number("sigma0") if "sigma0" in cfg.values else None
    kernels = family_kernels(fam, cfg.numbers("sigma_grid"), sig0)
    data = cfg.words("data")
    for d in data:
        if d not in DATA_NAMES:
            raise ConfigError(f"data must be among {DATA_NAMES}")
    R = cfg.number("R")
    h = cfg.number("h") if "h" in cfg.values else None
    sweep = harnack_sweep(kernels, R, data, h, cfg.number("multiplier"))
    rows = [r.as_row() for r in sweep.reports]
    header = list(rows[0]) if rows else []
    art.csv("harnack.csv", header, [[r[k] for k in header] for r in rows])
    hrows = []
    for r in sweep.reports:
        ratio = dict(r.holder_ratio()) if r.holder else {}
        for a, s in r.holder:
            hrows.append([r.kernel, r.data, a, s, ratio.get(a, math.nan)])
    art.csv("harnack_holder.csv", ["kernel", "data", "alpha", "seminorm", "ratio"], hrows)
    art.json("harnack.json", {"family": fam, "R": R, "summary": sweep.as_dict()})
    art.figure("harnack.png", "harnack_figure", sweep.reports)
    print(f"harnack: uniformity ratio {sweep.uniformity_ratio:.4g} ({'pass' if sweep.passed else 'FAIL'})")
    return EXIT_OK if sweep.passed else EXIT_PROPERTY


# ---------------------------------------------------------------- parser

DEFAULTS = {
    "constant": {"family": "power", "sigma": "1.0", "n": "1", "method": "direct", "tol": "1e-10"},
    "moments": {"family": "power", "sigma": "1.0", "R_min": "0.001", "R_max": "1000", "count": "13", "tol": "1e-11"},
    "bounds": {
        "family": "power",
        "sigma": "1.0",
        "n": "1",
        "R_min": "0.001",
        "R_max": "1000",
        "count": "13",
        "cases": "200",
        "tol": "1e-10",
    },
    "asymptotics": {
        "target": "to-2",
        "sequence": "power",
        "quantity": "moment",
        "n": "1",
        "R": "1.0",
        "k_min": "1",
        "k_max": "10",
        "tol": "1e-6",
    },
    "operator": {
        "family": "power",
        "sigma": "1.0",
        "n": "1",
        "function": "cos",
        "points": "0",
        "operator": "linear",
        "lam": "1.0",
        "Lam": "1.0",
        "kappa1": "0.5",
        "tol": "1e-6",
    },
    "barrier": {
        "family": "power",
        "sigma": "1.0",
        "n": "1",
        "lam": "1.0",
        "Lam": "1.0",
        "R": "1.0",
        "kappa1": "0.5",
        "samples": "32",
        "tol": "1e-6",
    },
    "harnack": {
        "family": "power",
        "sigma_grid": "0.5,1.0,1.5,1.9",
        "R": "1.0",
        "data": "bump",
        "multiplier": "1.0",
        "tol": "1e-6",
    },
}

RUNNERS = {
    "constant": run_constant,
    "moments": run_moments,
    "bounds": run_bounds,
    "asymptotics": run_asymptotics,
    "operator": run_operator,
    "barrier": run_barrier,
    "harnack": run_harnack,
}

# flag -> config key, per subcommand
FLAGS = {
    "constant": [("--n", "n", int), ("--method", "method", str)],
    "moments": [("--R", "R", str), ("--R-min", "R_min", float), ("--R-max", "R_max", float), ("--count", "count", int)],
    "bounds": [
        ("--n", "n", int),
        ("--R-min", "R_min", float),
        ("--R-max", "R_max", float),
        ("--count", "count", int),
        ("--cases", "cases", int),
    ],
    "asymptotics": [
        ("--target", "target", str),
        ("--sequence", "sequence", str),
        ("--quantity", "quantity", str),
        ("--n", "n", int),
        ("--R", "R", float),
        ("--k-min", "k_min", int),
        ("--k-max", "k_max", int),
    ],
    "operator": [
        ("--function", "function", str),
        ("--points", "points", str),
        ("--operator", "operator", str),
        ("--n", "n", int),
        ("--lam", "lam", float),
        ("--Lam", "Lam", float),
        ("--R", "R", float),
        ("--kappa1", "kappa1", float),
        ("--kappa0", "kappa0", float),
    ],
    "barrier": [
        ("--n", "n", int),
        ("--lam", "lam", float),
        ("--Lam", "Lam", float),
        ("--R", "R", float),
        ("--kappa1", "kappa1", float),
        ("--samples", "samples", int),
    ],
    "harnack": [
        ("--family", "family", str),
        ("--sigma-grid", "sigma_grid", str),
        ("--R", "R", float),
        ("--h", "h", float),
        ("--data", "data", str),
        ("--multiplier", "multiplier", float),
    ],
}

HELP = {
    "constant": "normalising constant as JSON",
    "moments": "lower and upper kernel moments over radii",
    "bounds": "moment inequalities, scaling scan and constant envelope",
    "asymptotics": "limits along kernel sequences",
    "operator": "linear or extremal operator at points",
    "barrier": "plateau search and capped barrier checks",
    "harnack": "grid Harnack and Hoelder experiments",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, metavar="PATH", help="key=value settings file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: results)")
    common.add_argument("--tol", type=float, help="tolerance override")
    common.add_argument("--seed", type=int, help="seed for sampled grids (default 0)")
    common.add_argument("--plot", action="store_true", default=None, help="also write PNG figures")
    for key in ("family", "sigma", "sigma_lower", "sigma_upper", "a", "sigma0", "table"):
        flag = "--" + key.replace("_", "-")
        common.add_argument(flag, dest=f"k_{key}", metavar=key.upper(), help=f"kernel {key}")

    parser = argparse.ArgumentParser(prog="varorder", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=TOOL)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name, parents=[common], help=HELP[name])
        for flag, key, typ in FLAGS[name]:
            if name == "harnack" and key == "family":
                continue  # shared kernel flag already covers it
            sp.add_argument(flag, dest=f"o_{key}", type=typ, metavar=key.upper())
    return parser


def make_config(args) -> RunConfig:
    file_values, base = {}, None
    if args.config is not None:
        file_values = load_config(args.config)
        base = args.config.parent
    over = {}
    for k, v in vars(args).items():
        if v is None:
            continue
        if k.startswith("k_") or k.startswith("o_"):
            over[k[2:]] = v
    for k in ("out", "tol", "seed"):
        if getattr(args, k) is not None:
            over[k] = getattr(args, k)
    if args.plot:
        over["plot"] = "true"
    return RunConfig.resolve(args.subcommand, DEFAULTS[args.subcommand], file_values, over, base)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(args)
        art = Artifacts(cfg)
        status = RUNNERS[args.subcommand](cfg, art)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToleranceError as exc:
        print(f"tolerance not met: {exc}", file=sys.stderr)
        return EXIT_TOL
    except PropertyFailure as exc:
        print(f"property failed: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    art.flush()
    return status


if __name__ == "__main__":
    sys.exit(main())
