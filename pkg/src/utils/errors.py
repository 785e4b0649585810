"""Custom exception types for consistent error handling."""


class ParameterError(ValueError):
    """Raised when a parameter falls outside its admissible range."""


class ExcludedCaseError(ParameterError):
    """Raised for the CKN case b = a + 1, which the parameter map excludes."""


class ChartError(ValueError):
    """Raised when a point lies outside the boundary-flattening chart."""


class SingularPointError(ValueError):
    """Raised when a transform is evaluated at its own center."""


class OutOfRangeError(ValueError):
    """Raised when a moving-sphere radius does not exceed mu1."""


class IntegrabilityError(ValueError):
    """Raised when a weighted integral is not integrable at its pole."""


class ConfigParseError(ValueError):
    """Raised when a scenario config file cannot be parsed strictly."""


class NoMaximumError(ArithmeticError):
    """Raised when t -> Phi(t u) has no interior maximum on the ray."""


class ScaleError(ArithmeticError):
    """Raised when a blow-up length scale underflows."""


class InvariantViolationError(RuntimeError):
    """Raised when a checked invariant fails at runtime."""


class DiagnosticsError(RuntimeError):
    """Raised when a solve runs away (negative energy, lost Nehari scale)."""


class RegimeError(RuntimeError):
    """Raised when a half-space solve signals parameters outside the existence regime."""


class TruncationError(RuntimeError):
    """Raised when the outer shell carries too much of an integral (Rmax too small)."""


class SweepRangeError(RuntimeError):
    """Raised when a ray sweep peaks on the edge of its t-grid."""


class OracleFailureError(RuntimeError):
    """Raised when an oracle field or constant fails certification."""


class GraphExecutionError(RuntimeError):
    """Raised when a scenario graph fails to compile or execute."""
