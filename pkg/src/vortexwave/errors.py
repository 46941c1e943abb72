"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: DomainError -> 2, SingularityError -> 3,
ConvergenceError -> 4.
"""


class VortexWaveError(Exception):
    """Base class for library errors."""


class DomainError(VortexWaveError, ValueError):
    """A parameter lies outside the admissible range."""


class SingularityError(VortexWaveError, ArithmeticError):
    """Evaluation at (or numerically at) a kernel singularity."""


class ConvergenceError(VortexWaveError, RuntimeError):
    """An iterative solver failed to reach its tolerance.

    ``best`` carries the best iterate seen, ``history`` the residual trace.
    """

    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = list(history) if history is not None else []
