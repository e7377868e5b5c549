"""Exception classes raised by quadprop."""


class QuadPropError(Exception):
    """Base class for all numerical and configuration errors."""


class UnknownModelError(QuadPropError, KeyError):
    def __init__(self, name, available):
        self.name = name
        self.available = tuple(available)
        super().__init__(
            f"unknown model {name!r}; available: {', '.join(self.available)}")

    def __str__(self):
        return self.args[0]


class ExpressionError(QuadPropError, ValueError):
    """A coefficient or initial-data expression is outside the grammar."""


class SingularCoefficientError(QuadPropError):
    """a(t) vanishes or changes sign where the formulas divide by it."""


class SolverError(QuadPropError):
    """Adaptive ODE integration failed to meet its tolerance."""


class BlowUpError(SolverError):
    pass


class SingularMuError(QuadPropError):
    """The characteristic function is (numerically) zero at a requested time."""


class SingularIntegrandError(QuadPropError):
    """mu'(t) vanishes inside an integration range of the phase formulas."""


class QuadratureError(QuadPropError):
    pass


class OutOfRangeError(QuadPropError, ValueError):
    """A time lies outside the range where a model-specific formula is valid."""


class CoincidentGammaError(QuadPropError):
    """gamma(t) == gamma(s): the composed kernel is undefined."""


class UnderResolvedPhaseError(QuadPropError):
    """The grid is too coarse for the kernel's oscillation."""

    def __init__(self, message, suggested_n):
        super().__init__(message)
        self.suggested_n = suggested_n


class HistoryGapError(QuadPropError):
    """A Duhamel integral needs wavefunction history that was not supplied."""


class NaNDetectedError(QuadPropError):
    pass


class ConfigError(QuadPropError, ValueError):
    """A run configuration failed validation."""


class DomainTruncationWarning(UserWarning):
    """A wavefunction is not negligible at the ends of its grid."""
