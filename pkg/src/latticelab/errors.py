"""Exception hierarchy shared by all latticelab modules.

Two failure families matter operationally: configuration problems that are
detectable before any heavy computation starts (exit code 2 in the CLI), and
numerical failures discovered mid-run (exit code 3).
"""


class LatticeLabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LatticeLabError):
    """A precondition on the requested computation is violated."""

    exit_code = 2


class DomainError(ConfigurationError):
    """An input lies outside the mathematical domain of an operation."""


class NumericsError(LatticeLabError):
    """A computation started but failed to produce a trustworthy result."""

    exit_code = 3


class IntegrationError(NumericsError):
    """Time stepping produced a non-finite state."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class SolverError(NumericsError):
    """An iterative solver (Newton, fixed point, eigensolver) did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ContractionError(SolverError):
    """A fixed-point map stopped contracting; parameters are too large."""


class AmbiguityError(NumericsError):
    """Data does not determine a unique answer (e.g. band detection)."""

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates or []
