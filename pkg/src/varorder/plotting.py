"""Optional PNG figures written next to the CSV artifacts.

Only imported when ``--plot`` is given, so matplotlib is not needed for
the numerical work.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "legend.fontsize": 8,
}

# fixed metadata keeps repeated runs byte-stable
_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def moments_figure(rows, path: Path) -> Path:
    """Log-log plot of both moments against ``R``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        R = [r["R"] for r in rows]
        ax.loglog(R, [r["lowerC"] for r in rows], "o-", label="lower moment")
        ax.loglog(R, [r["upperC"] for r in rows], "s-", label="upper moment")
        ax.set_xlabel("R")
        ax.legend()
        return _save(fig, path)


def envelope_figure(radii, rho, c1, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogx(radii, rho, "o-", label="C (lower + upper)")
        ax.axhline(c1, color="k", ls="--", lw=0.8, label="dimension floor")
        ax.set_xlabel("R")
        ax.legend()
        return _save(fig, path)


def asymptotics_figure(ks, deviations, threshold, label, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(ks, deviations, "o-", label=label)
        ax.axhline(threshold, color="k", ls="--", lw=0.8, label="threshold")
        ax.set_xlabel("k")
        ax.set_ylabel("relative deviation")
        ax.legend()
        return _save(fig, path)


def operator_figure(labels, values, errors, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        idx = range(len(values))
        ax.errorbar(list(idx), values, yerr=errors, fmt="o", capsize=2)
        ax.set_xticks(list(idx))
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylabel("operator value")
        return _save(fig, path)


def barrier_figure(R0, mminus, err, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.errorbar(R0, mminus, yerr=err, fmt="o-", capsize=2)
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xscale("log")
        ax.set_xlabel("|x|")
        ax.set_ylabel("minimal operator")
        return _save(fig, path)


def harnack_figure(reports, path: Path) -> Path:
    """Quotients per kernel on the left, Hoelder profiles on the right."""
    with plt.rc_context({**STYLE, "figure.figsize": (8.0, 3.4)}):
        fig, (a1, a2) = plt.subplots(1, 2)
        data = sorted({r.data for r in reports})
        for d in data:
            sel = [r for r in reports if r.data == d and not r.failure]
            a1.plot(range(len(sel)), [r.quotient for r in sel], "o-", label=d)
            for r in sel:
                if r.holder:
                    a, s = zip(*r.holder)
                    a2.semilogy(a, s, "-", alpha=0.7)
        ks = [r.kernel for r in reports if r.data == data[0]] if data else []
        a1.set_xticks(range(len(ks)))
        a1.set_xticklabels(ks, rotation=30, ha="right", fontsize=6)
        a1.set_ylabel("sup / inf on B_R")
        a1.legend()
        a2.set_xlabel("alpha")
        a2.set_ylabel("R^alpha seminorm")
        return _save(fig, path)
