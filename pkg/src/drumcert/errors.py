"""Exception hierarchy shared by all modules."""


class DrumCertError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(DrumCertError, ValueError):
    """Invalid user input (domain spec, run configuration, file contents)."""


class NumericalError(DrumCertError, ArithmeticError):
    """A computation could not produce a trustworthy result."""


# geometry
class NonPositiveRadius(ConfigError):
    pass


class NonStarShaped(ConfigError):
    pass


class DerivativeMismatch(ConfigError):
    pass


class TooFewNodes(ConfigError):
    pass


# specfun
class DomainError(DrumCertError, ValueError):
    pass


# basis
class ChargePointInside(ConfigError):
    pass


class ContinuationFailure(ConfigError):
    pass


class CoincidentPoint(NumericalError):
    pass


# discretization / solver
class DimensionMismatch(ConfigError):
    pass


class RankZero(NumericalError):
    pass


class IndefiniteInteriorNorm(NumericalError):
    pass


class NotConverged(NumericalError):
    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


# bounds
class NotStarShaped(ConfigError):
    pass


class IndistinctNeighbor(NumericalError):
    pass
