"""Exception types shared across the package."""


class SpectralGaugeError(Exception):
    """Base class for all package errors."""


class BadShape(SpectralGaugeError):
    pass


class NotRREF(SpectralGaugeError):
    pass


class RankDeficient(SpectralGaugeError):
    pass


class DegenerateForm(SpectralGaugeError):
    pass


class ProblemFileError(SpectralGaugeError):
    """Malformed problem or datum file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegreeOverflow(SpectralGaugeError):
    pass


class BoundaryZero(SpectralGaugeError):
    pass


class TooFewZeros(SpectralGaugeError):
    pass


class ConditionsViolated(SpectralGaugeError):
    pass


class DegenerateEigenfunction(SpectralGaugeError):
    pass


class ZeroPairing(SpectralGaugeError):
    pass


class TooFewPairs(SpectralGaugeError):
    pass


class BadSequence(SpectralGaugeError):
    pass


class NoAdmissibleRadii(SpectralGaugeError):
    pass


class RadiusTooLarge(SpectralGaugeError):
    pass


class NonSimpleZero(SpectralGaugeError):
    pass


class IllConditioned(SpectralGaugeError):
    pass


class QuadratureNotConverged(SpectralGaugeError):
    pass


class UnstableDiscretization(SpectralGaugeError):
    pass
