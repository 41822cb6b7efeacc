"""Exception hierarchy shared across the package."""


class UDWError(Exception):
    """Base class for all package errors."""


class InfeasibleError(UDWError, ValueError):
    """Parameters admit no open detection branch.

    ``report`` carries the :class:`~udw_momentum.kinematics.ValidationReport`
    when one was produced.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ClosedChannelError(InfeasibleError):
    """A detector gap lies below the particle mass (no on-shell momentum)."""


class DegenerateGeometryError(UDWError, ValueError):
    """Geometry for which a quantity is undefined (P = 0, B = 0, ...)."""


class ContractViolation(UDWError, ValueError):
    """An operation was called outside its stated preconditions."""


class QuadratureError(UDWError, ArithmeticError):
    """Auto-refining quadrature did not converge.

    ``estimate`` holds the last value computed before giving up.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ResolutionError(UDWError, ArithmeticError):
    """A tabulation or brute-force grid is too coarse for the requested accuracy."""
