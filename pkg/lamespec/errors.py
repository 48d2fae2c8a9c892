"""Exception hierarchy shared by the services, the CLI and the HTTP API."""


class LameError(Exception):
    """Base class for every numerical failure raised by the library."""


class SeriesDivergenceError(LameError, ValueError):
    pass


class PoleProximityError(LameError, ValueError):
    pass


class NoConvergenceError(LameError):
    pass


class SingularJacobianError(LameError):
    pass


class ParityMismatchError(LameError):
    pass


class ContinuationStallError(LameError):
    """Step size underflowed; ``q`` and ``s`` locate the stall on the path."""

    def __init__(self, message: str, q: complex, s: float):
        super().__init__(message)
        self.q = q
        self.s = s


class UnmatchedStateError(LameError):
    pass


class ConfigError(LameError, ValueError):
    """Invalid run configuration; ``problems`` holds one message per field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class FitError(LameError, ValueError):
    """Too few usable coefficients for a radius fit."""
