"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit-specific failures."""


class DomainError(ToolkitError, ValueError):
    """A state fell outside [0, 1]."""


class ParameterError(ToolkitError, ValueError):
    """A precondition on user-supplied parameters was violated."""


class ResolutionError(ToolkitError, RuntimeError):
    """A computation outgrew its exact-representation budget.

    ``max_feasible`` carries the largest parameter value (iterate count,
    refinement depth, ...) that stayed inside the budget.
    """

    def __init__(self, message, max_feasible=None):
        super().__init__(message)
        self.max_feasible = max_feasible


class ScheduleError(ToolkitError, RuntimeError):
    """Block-schedule bookkeeping overflowed 64-bit counts."""

    def __init__(self, message, max_feasible_n=None):
        super().__init__(message)
        self.max_feasible_n = max_feasible_n


class NotShadowed(ToolkitError, RuntimeError):
    """Interval refinement died: no true orbit stays within eps.

    ``failed_index`` is the first pseudo-orbit position at which the
    surviving set became empty.
    """

    def __init__(self, message, failed_index=None):
        super().__init__(message)
        self.failed_index = failed_index


class ConstructionImpossible(ToolkitError, RuntimeError):
    """The observable does not separate any two cycles in the class."""
