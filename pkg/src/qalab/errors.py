"""Exception hierarchy shared by every qalab module."""


class QALabError(Exception):
    """Base class for all library errors."""


class ParseError(QALabError):
    """Malformed instance or config text."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructureError(QALabError):
    """Well-formed lines that do not add up to a valid instance/config."""


class CapacityError(QALabError):
    """Requested Hilbert-space size exceeds a configured budget."""


class DimensionError(QALabError, ValueError):
    """Vector length does not match the Hilbert-space dimension."""


class EigensolverError(QALabError):
    """Dense diagonalization failed or returned inaccurate eigenpairs."""


class SingularityError(QALabError):
    """A vanishing spectral gap makes an estimate undefined."""


class PositivityError(QALabError):
    """A matrix expected to be (strictly) positive is not."""


class NormDriftError(QALabError):
    """State norm drifted beyond the abort threshold during propagation.

    ``trajectory`` holds the samples recorded before the abort.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ScheduleJunctionError(QALabError):
    """Derivative requested exactly at a kink; carries both one-sided values."""

    def __init__(self, t, left, right):
        self.t = t
        self.left = left
        self.right = right
        super().__init__(f"dGamma/dt is two-sided at t={t!r}: left={left!r}, right={right!r}")
