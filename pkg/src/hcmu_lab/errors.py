"""Shared exception types and process exit codes."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INADMISSIBLE = 2
EXIT_NUMERICAL = 3


class HcmuError(Exception):
    """Base class for all workbench errors."""


class InadmissibleParams(HcmuError):
    """Extremal-value pair fails the admissibility inequalities.

    ``violated`` names the inequality that failed, e.g. ``"K1 > 0"``.
    """

    def __init__(self, message: str, violated: str):
        super().__init__(message)
        self.violated = violated


class NumericalFailure(HcmuError):
    """A numerical procedure could not meet its contract."""


class StepTooLarge(NumericalFailure):
    """ODE step violated monotonicity or the open-interval bracket."""


class FrameDrift(NumericalFailure):
    """Integrated frame lost orthonormality beyond tolerance."""


class NonFiniteIterate(NumericalFailure):
    """Optimizer produced a non-finite residual or step."""


class PathLeavesDomain(HcmuError):
    """A grid path references nodes outside the domain."""


class AlgebraConsistencyError(HcmuError):
    """An exact reduction that must close did not (upstream corruption)."""


class FormatError(HcmuError):
    """Malformed serialized data; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ConfigError(FormatError):
    """Bad configuration file entry."""
