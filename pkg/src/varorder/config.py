"""Flat ``key=value`` run configuration.

Blank lines and ``#`` comments are ignored.  Keys are checked against a
fixed vocabulary so that misspellings fail early instead of silently
falling back to defaults.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

KERNEL_KEYS = ("family", "sigma", "sigma_lower", "sigma_upper", "a", "sigma0", "table")

RUN_KEYS = (
    "n",
    "tol",
    "seed",
    "out",
    "method",
    "R",
    "R_min",
    "R_max",
    "count",
    "cases",
    "target",
    "sequence",
    "quantity",
    "k_min",
    "k_max",
    "function",
    "points",
    "operator",
    "lam",
    "Lam",
    "kappa1",
    "kappa0",
    "samples",
    "sigma_grid",
    "data",
    "h",
    "multiplier",
    "plot",
)

KNOWN_KEYS = frozenset(KERNEL_KEYS + RUN_KEYS)
PRESENTATION_KEYS = frozenset({"out", "plot"})


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key=value`` lines into an ordered dict of strings."""
    out: dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{no}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"{source}:{no}: empty value for {key!r}")
        out[key] = value
    return out


def load_config(path: str | Path) -> dict[str, str]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config_text(text, str(p))


@dataclass
class RunConfig:
    """Resolved settings of one run: defaults, then file, then flags."""

    subcommand: str
    values: dict = field(default_factory=dict)
    base_dir: Path | None = None

    def __post_init__(self):
        bad = set(self.values) - KNOWN_KEYS
        if bad:
            raise ConfigError(f"unknown keys {sorted(bad)}")
        if self.tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    @classmethod
    def resolve(cls, subcommand, defaults, file_values, overrides, base_dir=None) -> "RunConfig":
        vals = dict(defaults)
        user = {**file_values, **{k: v for k, v in overrides.items() if v is not None}}
        if any(k in user for k in KERNEL_KEYS):
            # a user kernel replaces the default one entirely
            for k in KERNEL_KEYS:
                vals.pop(k, None)
        vals.update(file_values)
        vals.update({k: str(v) for k, v in overrides.items() if v is not None})
        return cls(subcommand, vals, base_dir)

    def kernel_mapping(self) -> dict[str, str]:
        return {k: self.values[k] for k in KERNEL_KEYS if k in self.values}

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def number(self, key: str, default=None) -> float:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing setting {key!r}")
            return float(default)
        try:
            return float(self.values[key])
        except ValueError:
            raise ConfigError(f"{key!r} is not a number: {self.values[key]!r}") from None

    def integer(self, key: str, default=None) -> int:
        v = self.number(key, default)
        if v != int(v):
            raise ConfigError(f"{key!r} must be an integer")
        return int(v)

    def numbers(self, key: str, default=None) -> list[float]:
        raw = self.values.get(key, default)
        if raw is None:
            raise ConfigError(f"missing setting {key!r}")
        try:
            return [float(s) for s in str(raw).split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"{key!r} must be a comma-separated list of numbers") from None

    def words(self, key: str, default=None) -> list[str]:
        raw = self.values.get(key, default)
        if raw is None:
            raise ConfigError(f"missing setting {key!r}")
        return [s.strip() for s in str(raw).split(",") if s.strip()]

    @property
    def tol(self) -> float:
        return self.number("tol", 1e-6)

    @property
    def seed(self) -> int:
        return self.integer("seed", 0)

    @property
    def out(self) -> Path:
        return Path(self.values.get("out", "results"))

    @property
    def plot(self) -> bool:
        return str(self.values.get("plot", "false")).lower() in ("1", "true", "yes", "on")

    def resolved(self) -> dict[str, str]:
        """Sorted copy, embedded in every artifact.

        Where and how results are rendered does not change them, so
        ``out`` and ``plot`` are left out.
        """
        return {k: self.values[k] for k in sorted(self.values) if k not in PRESENTATION_KEYS}
