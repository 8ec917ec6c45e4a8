"""Shared exception types."""


class GrainMismatchError(ValueError):
    """Two objects built against different grid depths were combined."""


class ResourceGuardError(RuntimeError):
    """A request would enumerate more cells or rectangles than the guard allows."""


class ConvergenceError(RuntimeError):
    """An iterative solve hit its iteration cap before reaching tolerance."""

    def __init__(self, message: str, best: float, iterations: int):
        super().__init__(message)
        self.best = best
        self.iterations = iterations
