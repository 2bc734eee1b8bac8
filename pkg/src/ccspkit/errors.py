"""Exception types raised across the package."""


class CcspError(Exception):
    """Base class for all errors raised by ccspkit."""


class ConfigurationError(CcspError, ValueError):
    """Shapes or settings are inconsistent (dimension mismatch, empty lists)."""


class ParameterError(CcspError, ValueError):
    """A scalar parameter lies outside its admissible domain."""


class HypothesisError(CcspError, ValueError):
    """The hypotheses of a convergence result are violated."""


class PreconditionError(CcspError, ValueError):
    """An operation was called on inputs that do not meet its precondition."""


class NotNeutralError(ConfigurationError):
    """A matrix expected to be orthogonal is not.

    Attributes
    ----------
    deviation : float
        Measured Frobenius norm ``||S^T S - I||_F``.
    """

    def __init__(self, deviation, tol):
        self.deviation = float(deviation)
        self.tol = float(tol)
        super().__init__(
            f"matrix is not orthogonal: ||S^T S - I||_F = {self.deviation:.6g} "
            f"exceeds tolerance {self.tol:.1e}")


class ProblemGenerationError(CcspError, RuntimeError):
    """A random problem instance could not be generated."""


class SolutionRejected(CcspError, ValueError):
    """A candidate CCSP solution failed verification.

    Attributes
    ----------
    solution : CcspSolution
        The candidate, with both residuals filled in.
    """

    def __init__(self, solution, tol):
        self.solution = solution
        self.tol = tol
        rw, rm = solution.residual_pair
        super().__init__(
            f"solution rejected at tol={tol:.1e}: ||d - Gc|| = {rw:.6g}, "
            f"||c - m(d)|| = {rm:.6g}")
