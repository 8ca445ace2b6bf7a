"""Exception hierarchy.

Every numerical failure is an ``EllipvolError`` so callers (the CLI in
particular) can map them to exit codes without catching bare ``ValueError``.
"""


class EllipvolError(Exception):
    """Base class for all package errors."""


class NumericalError(EllipvolError, ArithmeticError):
    """A computation hit a probability-zero or ill-posed numerical event."""


class RankDeficient(NumericalError):
    pass


class SingularInner(NumericalError):
    pass


class SingularM(NumericalError):
    pass


class NotSymmetric(EllipvolError, ValueError):
    pass


class NotPositive(NumericalError):
    pass


class NonPositiveVariance(NumericalError):
    """The asymptotic variance formula returned sigma^2 <= 0 (p too small)."""


class DomainError(EllipvolError, ValueError):
    pass


class OverflowGuard(EllipvolError, ValueError):
    pass


class TooFewSamples(EllipvolError, ValueError):
    pass


class ConfigError(EllipvolError, ValueError):
    pass
