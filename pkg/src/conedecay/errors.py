"""Exception types raised by the numerics."""


class ConeDecayError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(ConeDecayError, ValueError):
    pass


class DomainError(ConeDecayError, ValueError):
    """A point fell outside the domain of a chart or field."""


class NotCritical(ConeDecayError):
    pass


class DegenerateCritical(ConeDecayError):
    pass


class BoxTooLarge(ConeDecayError):
    """Sign or invertibility conditions of a Morse step fail on the box."""


class QuadratureFailure(ConeDecayError):
    pass


class NegativeRadicand(ConeDecayError, ValueError):
    pass


class SingularJacobian(ConeDecayError):
    pass


class ShrinkExhausted(ConeDecayError):
    pass


class EmptySupport(ConeDecayError, ValueError):
    pass


class ZeroMass(ConeDecayError, ValueError):
    pass


class MemoryCapExceeded(ConeDecayError):
    pass


class AllZeroValues(ConeDecayError, ValueError):
    pass


class ResolutionExceeded(ConeDecayError):
    pass


class ConfigError(ConeDecayError, ValueError):
    pass
