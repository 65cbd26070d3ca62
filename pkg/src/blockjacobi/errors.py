"""Exception types shared across the library."""


class DomainError(ValueError):
    """Argument lies outside the mathematical domain of a function."""


class ParameterError(ValueError):
    """Family or configuration parameters violate their constraints."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to converge."""


class SingularityError(RuntimeError):
    """A linear system is singular, or too close to singular to trust."""


class PairingError(RuntimeError):
    """Eigenvalue clusters are too close to pair with unperturbed branches."""


class PreconditionError(RuntimeError):
    """A documented precondition of an operation is not met by the data."""
