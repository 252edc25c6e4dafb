"""Exception hierarchy shared by the library and the CLI."""


class GpcError(Exception):
    """Base class for all errors raised by gpcpdf."""


class DomainError(GpcError, ValueError):
    """An argument lies outside [-1, 1] or another admissible domain."""


class PreconditionError(GpcError, ValueError):
    """An operation was called with arguments violating its contract."""


class ConvergenceError(GpcError, RuntimeError):
    """An iterative solver failed to converge.

    Attributes
    ----------
    index : int or None
        Index of the offending node or unknown, when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnresolvedOscillationError(GpcError, RuntimeError):
    """The derivative oscillates faster than the critical-point scan resolves."""


class RegistryError(GpcError, KeyError):
    """Unknown function or density registry id."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NumericalError(GpcError, RuntimeError):
    """A numerical stage produced an inconsistent or non-finite result."""
