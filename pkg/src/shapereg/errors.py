"""Exception types shared across the solver and its front ends."""

from __future__ import annotations


class ConvergenceFailure(RuntimeError):
    """Iteration budget exhausted before the requested tolerance was reached.

    Carries the best report found so far (if any) on ``report``.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class InfeasibleProblem(RuntimeError):
    """The constraint system admits no solution.

    ``constraint_indices`` names the constraints involved in the conflict
    (when known) so callers can surface which requirements clash.
    """

    def __init__(self, message: str, constraint_indices=(), detail: str = ""):
        super().__init__(message)
        self.constraint_indices = tuple(constraint_indices)
        self.detail = detail


class NotStrictlyFeasible(InfeasibleProblem):
    """The adaptive solve requires a strictly feasible problem and found none."""


class ModelFormatError(ValueError):
    """A serialized document is malformed."""


class VersionMismatch(ModelFormatError):
    """A serialized document declares an unsupported format version."""


class CsvFormatError(ValueError):
    """A dataset CSV is malformed; carries the offending line/column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column
