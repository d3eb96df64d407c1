"""Exception types shared across the package."""


class TieThreshError(Exception):
    """Base class for every error this package raises on purpose."""


class StructuralError(TieThreshError, ValueError):
    """An input violates a structural precondition (shape, ordering, range)."""


class ConfigError(TieThreshError, ValueError):
    """A configuration is invalid or infeasible."""


class ResampleExhaustedError(TieThreshError, RuntimeError):
    """A resampling loop hit its attempt cap without success."""


class ContactParseError(TieThreshError, ValueError):
    """A contact-file record could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class UndefinedCorrelationError(TieThreshError, ValueError):
    """Correlation requested for a constant sample."""


class UnknownScenarioError(TieThreshError, ValueError):
    """Scenario name not present in the registry."""
