"""Exception types shared by the library and mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Malformed or unknown configuration input (exit status 2)."""


class ToleranceError(RuntimeError):
    """A requested accuracy could not be reached (exit status 3).

    Attributes
    ----------
    achieved : float
        The error bound that was actually obtained.
    requested : float
        The error bound that was asked for.
    """

    def __init__(self, message: str, achieved: float = float("nan"), requested: float = float("nan")):
        super().__init__(f"{message} (achieved {achieved:.3e}, requested {requested:.3e})")
        self.achieved = achieved
        self.requested = requested


class PropertyFailure(AssertionError):
    """A computed quantity violated a mathematical property (exit status 4)."""
