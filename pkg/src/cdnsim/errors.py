"""Exception types shared across modules."""


class ValidationError(ValueError):
    """Invalid input data or configuration."""


class InfeasibleError(ValueError):
    """Structurally valid request that cannot be satisfied (e.g. k > node count)."""
