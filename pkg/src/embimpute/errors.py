"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class ConvergenceError(RuntimeError):
    """The diffusion's convergence guarantees cannot hold for the given system."""
