"""Exception types shared across the library and mapped to CLI exit codes."""


class DomainError(ValueError):
    """A point or segment lies outside the domain an operation supports."""


class InfeasibleError(RuntimeError):
    """The coverage problem cannot be satisfied for at least one user."""

    def __init__(self, message: str, users=()):
        super().__init__(message)
        self.users = tuple(users)


class GuardError(ValueError):
    """A size guard protecting an exponential-time routine was violated."""


class EmptyProblemError(ValueError):
    """Nothing is left to solve after filtering (no flight points, no columns)."""


class ConfigError(ValueError):
    """The run configuration failed validation."""
