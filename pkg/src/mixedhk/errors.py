"""Exception types shared across the package."""


class MixedHKError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MixedHKError):
    """Invalid configuration file or inconsistent model parameters.

    Carries an optional source location so parse errors can point at the
    offending line.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}: "
        elif path is not None:
            loc += " "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class ScheduleExhaustedError(MixedHKError):
    """A table-driven stubbornness schedule was queried past its last row."""


class NumericalFailure(MixedHKError):
    """An iterative numerical routine did not reach its tolerance.

    ``best`` holds the best value found, ``gap`` an upper bound on the
    remaining error.
    """

    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap


class SizeLimitError(MixedHKError):
    """Input exceeds a documented brute-force size cap."""


class IntegrityError(MixedHKError):
    """A persisted trajectory file is malformed, truncated, or mismatched."""
