"""Exception types raised across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, range, sign)."""


class UnsupportedNormError(ValueError):
    """The requested norm has no implementation for this operation."""


class DivergenceError(RuntimeError):
    """An iterative solver produced non-finite iterates."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite iterate at iteration {iteration}")


class RecipeError(ValueError):
    """A singular-vector recipe does not satisfy its construction rules."""
