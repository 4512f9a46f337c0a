"""Exception hierarchy shared by all modules."""


class CollapseHypError(Exception):
    """Base class for package errors."""


class InvalidInputError(CollapseHypError, ValueError):
    """A point, parameter or file does not satisfy its contract."""


class DegeneracyError(CollapseHypError):
    """A geometric or combinatorial object is degenerate."""


class MissingFaceError(CollapseHypError, KeyError):
    """A face was requested that does not belong to the complex."""


class GluingError(CollapseHypError):
    """Attaching data or induced metrics on shared faces are inconsistent."""


class StaleStepError(CollapseHypError):
    """A collapse step is no longer valid in the current complex."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class BudgetExceededError(CollapseHypError):
    """A search ran out of its step or time budget."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = dict(stats or {})


class ConstructionError(CollapseHypError):
    """A block complex failed its topological certificate."""


class RealizationError(CollapseHypError):
    """The metric solver stalled above tolerance."""

    def __init__(self, message, worst_constraint=None, residual=None):
        super().__init__(message)
        self.worst_constraint = worst_constraint
        self.residual = residual


class ConnectivityError(CollapseHypError):
    """An operation that needs a connected space received a disconnected one."""
