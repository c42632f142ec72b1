"""Exception types shared across the laboratory."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class FeasibilityError(RuntimeError):
    """A requested computation cannot be certified within the resource cap.

    Raised instead of silently truncating: a biased answer is worse than a
    refusal.  Attributes carry enough information to renegotiate the request.
    """

    def __init__(self, message, *, required_log_n=None, n_max=None,
                 grid_index=None, grid_point=None, max_usable=None):
        super().__init__(message)
        self.required_log_n = required_log_n
        self.n_max = n_max
        self.grid_index = grid_index
        self.grid_point = grid_point
        self.max_usable = max_usable


class ConditioningError(RuntimeError):
    """Covariance factorization failed even after the jitter ladder."""

    def __init__(self, message, *, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConvergenceError(RuntimeError):
    """An iterative refinement hit its iteration cap."""

    def __init__(self, message, *, best=None):
        super().__init__(message)
        self.best = best


class InsufficientSampleError(ValueError):
    """Too few replicates for the requested statistic."""


class EvaluationError(RuntimeError):
    """A user-supplied function returned a non-finite value."""
