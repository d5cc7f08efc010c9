"""Exception types shared across the package."""


class QuenchError(Exception):
    """Base class for all xyquench errors."""


class DomainError(QuenchError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class DegeneracyError(QuenchError):
    """A Hamiltonian is degenerate where a unique eigenbasis is required."""


class IntegrationError(QuenchError):
    """Adaptive integration failed.  Carries the mode and time of failure."""

    def __init__(self, message: str, k: float | None = None, t: float | None = None):
        super().__init__(message)
        self.k = k
        self.t = t


class InvariantViolation(QuenchError):
    """A physical invariant (trace, positivity, purity monotonicity) was
    violated beyond tolerance during an integration."""


class BoundaryMinimumError(QuenchError):
    """The minimum of a sampled curve sits on the grid boundary, so the
    search window was too narrow to bracket it."""


class ConfigError(QuenchError):
    """Invalid experiment configuration."""


class SchemaError(QuenchError):
    """An artifact file does not conform to the expected schema."""
