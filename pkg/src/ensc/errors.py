"""Exception hierarchy for the ensc package."""


class EnscError(Exception):
    """Base class for all errors raised by ensc."""

    code = "ENSC_ERROR"


class DimensionMismatch(EnscError, ValueError):
    code = "DIMENSION_MISMATCH"


class LengthMismatch(DimensionMismatch):
    code = "LENGTH_MISMATCH"


class ZeroColumn(EnscError, ValueError):
    code = "ZERO_COLUMN"

    def __init__(self, index):
        super().__init__(f"column {index} has (near) zero norm")
        self.index = index


class ZeroVector(EnscError, ValueError):
    code = "ZERO_VECTOR"


class NonFiniteEntries(EnscError, ValueError):
    code = "NON_FINITE"


class InvalidProblem(EnscError, ValueError):
    code = "INVALID_PROBLEM"


class InvalidDims(EnscError, ValueError):
    code = "INVALID_DIMS"


class DegenerateOracle(EnscError, ValueError):
    """The oracle point is zero, so the oracle region is undefined."""

    code = "DEGENERATE_ORACLE"


class SingularSystem(EnscError, ArithmeticError):
    code = "SINGULAR_SYSTEM"


class MaxIterationsExceeded(EnscError, RuntimeError):
    """Inner solver ran out of iterations; ``best`` holds the last iterate."""

    code = "MAX_ITERATIONS"

    def __init__(self, residual, best=None, iterations=None):
        super().__init__(
            f"inner solver did not reach tolerance (residual={residual:.3e})"
        )
        self.residual = residual
        self.best = best
        self.iterations = iterations


class MaxOuterIterationsExceeded(EnscError, RuntimeError):
    code = "MAX_OUTER_ITERATIONS"

    def __init__(self, best=None, trace=None):
        super().__init__("ORGEN hit its outer iteration cap before termination")
        self.best = best
        self.trace = trace


class OrthogonalPoint(EnscError, ValueError):
    code = "ORTHOGONAL_POINT"


class LambdaZero(EnscError, ValueError):
    code = "LAMBDA_ZERO"


class EigenSolverFailure(EnscError, RuntimeError):
    code = "EIGEN_SOLVER_FAILURE"


class FormatError(EnscError, ValueError):
    code = "BAD_FORMAT"
