"""Exception hierarchy shared by the library and the CLI."""


class So32Error(Exception):
    """Base class for all library errors."""


class ConfigurationError(So32Error, ValueError):
    """Invalid Fock-space, solver or run configuration."""


class DegenerateStateError(So32Error, ValueError):
    """Operation on a zero-norm state."""


class DomainError(So32Error, ValueError):
    """Generator or transform requested outside its domain."""


class CutoffTooSmallError(So32Error):
    """Truncated construction leaked more norm than the leakage gate allows."""

    def __init__(self, message: str, leakage: float):
        super().__init__(message)
        self.leakage = leakage


class UnstableSectorError(So32Error):
    """Excitation energy would be imaginary: ``alpha^2 < 2|tau|^2 sec^2 Theta``."""

    def __init__(self, message: str, sector: int | None = None):
        super().__init__(message)
        self.sector = sector


class CaseMismatchError(So32Error):
    """Coefficients violate the consistency conditions of the requested branch."""


class IterationLimitError(So32Error):
    """Self-consistency loop hit its iteration limit."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class UndefinedCorrelationError(So32Error, ZeroDivisionError):
    """Correlation function with a vanishing mean occupation in the denominator."""
