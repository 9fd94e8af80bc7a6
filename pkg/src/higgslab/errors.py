"""Exception hierarchy shared by all higgslab modules."""


class HiggsLabError(Exception):
    """Base class for every error raised by higgslab."""


class InvalidInputError(HiggsLabError, ValueError):
    """Input array is malformed or contains non-finite entries."""


class InvalidMetricError(HiggsLabError, ValueError):
    """A metric value is not Hermitian positive-definite.

    ``node`` holds the grid index of the first offending node when known.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class UnderResolvedError(HiggsLabError, ValueError):
    """Grid has fewer than the minimum number of nodes per side."""


class ContourError(HiggsLabError, ValueError):
    """Spectrum lies on (or is not separated by) a quadrature contour."""


class NumericalRankError(HiggsLabError, ValueError):
    """Numerical rank of a projector is ambiguous or inconsistent."""


class UnsupportedRankError(HiggsLabError, ValueError):
    """Operation is only defined for a specific matrix rank."""


class UndefinedPhaseError(HiggsLabError, ValueError):
    """Phase normalization requested for a vanishing invariant."""


class TrackingError(HiggsLabError, RuntimeError):
    """Eigenvalue sheets cannot be continued across a node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class TransportError(HiggsLabError, ValueError):
    """Square-root transport along a loop is ill-defined."""


class PositivityError(HiggsLabError, RuntimeError):
    """Heat-flow step size underflowed while trying to keep H positive."""


class PreconditionError(HiggsLabError, ValueError):
    """A documented precondition of an operation does not hold."""


class InsufficientDataError(HiggsLabError, ValueError):
    """Too few valid samples for a fit."""
