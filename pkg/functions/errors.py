"""
Errors raised across the engine. Each one derives from a built-in so callers may
catch ValueError / RuntimeError without importing this module.
"""


class StageError(Exception):
    """Base class for every engine error."""


class ValidationError(StageError, ValueError):
    """Bad configuration, scene, state or argument."""


class InvalidStateError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


class EmptyPathError(ValidationError):
    pass


class UnknownGoalIdError(ValidationError):
    pass


class InsufficientStatesError(ValidationError):
    pass


class DivergedError(StageError, RuntimeError):
    """Simulation left the sane range. `index` is the failing action of a rollout."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class MaxIterationsError(StageError, RuntimeError):
    """The constrained solver ran out of iterations."""

    def __init__(self, message: str, residual_norm: float, max_violation: float):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.max_violation = max_violation


class ExhaustedError(StageError, RuntimeError):
    """No stable state found for slot `index` within the attempt budget."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class EmptyTreeError(StageError, RuntimeError):
    pass


class AllDivergedError(StageError, RuntimeError):
    pass


class BudgetExhaustedError(StageError, RuntimeError):
    pass


class DegenerateSampleError(StageError, RuntimeError):
    pass
