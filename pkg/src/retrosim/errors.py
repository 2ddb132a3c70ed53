"""Exception hierarchy shared by all modules."""


class RetroError(Exception):
    """Base class for library errors."""


class DimensionError(RetroError, ValueError):
    """Operand shapes do not match the declared tensor structure."""


class CapacityError(RetroError):
    """A construction would exceed the configured size limits."""


class ContractViolation(RetroError, ValueError):
    """An input breaks a documented precondition (Hermiticity, PSD, ...)."""


class DomainError(ContractViolation):
    """A state has support outside the channel's domain."""


class PreconditionError(ContractViolation):
    """A solver path was called on an input it does not apply to."""


class NumericError(RetroError, ArithmeticError):
    """An iterative routine failed to converge.

    ``bracket`` holds the best known ``(lower, upper)`` interval when one is
    available.
    """

    def __init__(self, message: str, bracket: tuple[float, float] | None = None,
                 diagnostics: dict | None = None):
        super().__init__(message)
        self.bracket = bracket
        self.diagnostics = diagnostics or {}
