"""Variable-order nonlocal operators: normalising constants, kernel moments,
extremal operators, barriers and grid experiments."""

__version__ = "0.1.0"
