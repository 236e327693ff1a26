"""Exception hierarchy shared by all modules."""


class RobustRiskError(Exception):
    """Base class for library errors."""


class DomainError(RobustRiskError, ValueError):
    """Argument outside the domain where a function is defined."""


class ParamError(RobustRiskError, ValueError):
    """Invalid parameters for a divergence, model or risk specification."""


class ConstructionError(RobustRiskError):
    """A tail specification does not yield a valid divergence."""


class QuadratureError(RobustRiskError):
    """Integrand produced non-finite values where none are allowed."""


class SupportError(RobustRiskError):
    """A draw fell outside the support of the proposal density."""


class NonFiniteError(RobustRiskError):
    """Objective is +inf everywhere on the search region.

    For robust problems this signals that the finiteness integral fails
    for every dual point, so the robust risk is infinite.
    """


class InfeasibleError(RobustRiskError):
    """No feasible point found in the expanded search bracket."""


class IterationLimit(RobustRiskError):
    """Iteration cap reached; ``best`` carries the best point found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateError(RobustRiskError):
    """Worst-case density extraction is not possible at this solution."""


class PreconditionError(RobustRiskError, ValueError):
    """Theoretical preconditions of an operation are violated."""


class FallbackWarning(UserWarning):
    """A default was substituted because metadata was missing."""
