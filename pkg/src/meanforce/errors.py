"""Exception hierarchy shared by the library and the CLI."""


class MeanForceError(Exception):
    """Base class for library errors."""


class NotHermitianError(MeanForceError, ValueError):
    pass


class NotPositiveError(MeanForceError, ValueError):
    """An operator that must be positive (semi)definite is not."""


class ValidityGateError(MeanForceError, ValueError):
    """Parameters fall outside the range where an approximation is defined."""


class ResonanceError(MeanForceError, ValueError):
    """A Bohr frequency hits a pole of a discrete-bath coefficient."""


class ConvergenceError(MeanForceError, RuntimeError):
    pass


class DegeneracyError(MeanForceError, RuntimeError):
    """Multiplicities or null spaces differ from what the construction needs."""
