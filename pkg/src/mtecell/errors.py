"""Exception types shared across the package.

The split mirrors the CLI exit-code contract: input/validation problems
(exit 2) versus numerical failures (exit 3).
"""


class InputError(ValueError):
    """Bad user input: domain violations, schema problems, invalid files."""


class DomainError(InputError):
    """Argument outside its mathematical domain (e.g. u outside [0, 1])."""


class DesignError(InputError):
    """Experiment design violates a structural requirement."""


class InfeasibleBudgetError(DesignError):
    """Budget split implies an exposure share above 100%."""


class NumericsError(RuntimeError):
    """Numerical routine failed (non-convergence, singular system, ...)."""


class SingularSystemError(NumericsError):
    """Moment matrix is numerically singular, e.g. near-coincident propensities."""


class InsufficientDataError(NumericsError):
    """A required data bin is empty; the estimator is unavailable."""


class ModelMismatchError(InputError):
    """Data shape incompatible with the statistical model (e.g. non-binary outcomes)."""
