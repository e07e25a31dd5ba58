"""Exception types raised across the package.

Validation failures subclass :class:`ValueError` so callers that only care
about "bad input" can catch that; domain and numerical failures have their
own branches because the CLI maps them to distinct exit codes.
"""


class QGeoError(Exception):
    """Base class for every error raised by qgeo."""


class ValidationError(QGeoError, ValueError):
    """Input does not satisfy a structural invariant."""


class NotHermitian(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DomainError(QGeoError, ValueError):
    """Argument outside the mathematical domain of a function."""


class RadiusOutOfDomain(DomainError):
    pass


class DegenerateSpectrum(DomainError):
    """Operation needs distinct eigenvalues but found a (near) tie."""


class AmbiguousBranchMatching(DomainError):
    """Eigenvector branches of two spectra cannot be paired unambiguously."""


class NumericalFailure(QGeoError, ArithmeticError):
    pass


class SingularMatrix(NumericalFailure):
    pass


class StepTooLarge(NumericalFailure):
    """Finite-difference truncation error estimate exceeds the allowed budget."""
