"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid user-supplied parameters (mesh sizes, field parameters, CLI input)."""


class SolverFailure(RuntimeError):
    """Sparse factorization or solve failed (singular or numerically broken system)."""
