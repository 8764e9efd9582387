"""Exception types shared across the package."""


class RankrError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(RankrError):
    """Input array is malformed (wrong shape, non-finite entries, ...)."""


class InvalidRankError(RankrError):
    """Requested projection rank is outside the valid range."""


class RankDeficientProjectionError(RankrError):
    """sigma_r = 0: the rank-r projection cannot be inverted."""


class IllConditionedTriangularError(RankrError):
    """Triangular solve hit a (near-)zero diagonal entry."""


class AmbiguousRankError(RankrError):
    """Singular value gap at the requested rank is too small to trust."""


class InnerIterationFailureError(RankrError):
    """Kernel-vector refinement did not converge within its budget."""


class InvalidBasisError(RankrError):
    """Supplied nullspace basis does not have orthonormal columns."""


class NumericBreakdownError(RankrError):
    """NaN or Inf appeared while evaluating a system."""


class SolverError(RankrError):
    """A linear solve failed inside an iteration; carries the step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InsufficientStepsError(RankrError):
    """Trace is too short for the requested convergence-rate analysis."""


class LayoutError(RankrError):
    """Values passed to pack/unpack do not match the variable layout."""


class ParseError(RankrError):
    """Polynomial text could not be parsed; carries the offending position."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class NothingToDeflateError(RankrError):
    """Deflation was requested at a point with a full-rank Jacobian."""
