"""Exception hierarchy shared by the solvers and the command-line front end."""


class NlsLabError(Exception):
    """Base class for all errors raised by nlslab."""


class InvalidInputError(NlsLabError, ValueError):
    """An argument violates a documented precondition."""


class GridMismatchError(InvalidInputError):
    """Two profiles or an operator and a profile live on different grids."""


class NoGroundStateError(NlsLabError):
    """No decaying positive solution could be bracketed."""


class InvariantViolation(NlsLabError):
    """A computed object fails one of its structural invariants."""


class NonConvergenceError(NlsLabError):
    """An iteration hit its cap; the last iterate is kept for inspection."""

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class NumericalBreakdownError(NlsLabError):
    """A linear algebra kernel failed or a system is too ill-conditioned."""

    def __init__(self, message, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class InconsistentStateError(NlsLabError):
    """Quantities that must agree for a converged state do not."""


class StepSizeError(InvalidInputError):
    """The time step violates the phase-wrap guard of the split-step scheme."""


class ConservationBreach(NlsLabError):
    """Mass or energy drifted beyond tolerance during time evolution."""

    def __init__(self, message, partial_trace=None):
        super().__init__(message)
        self.partial_trace = partial_trace
