"""Exception types raised across the library."""


class ContractViolation(ValueError):
    """An argument violates a documented precondition (shape, range, or kind)."""


class DivergenceError(RuntimeError):
    """An update direction or iterate became non-finite.

    Carries the last good state in ``state`` so callers can inspect or
    restart from it.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class SaddleConvergenceError(RuntimeError):
    """The saddle oracle exhausted its iteration budget.

    ``residual`` holds the last fixed-point residual, ``saddle`` the last
    iterate packaged as a SaddlePoint with converged=False.
    """

    def __init__(self, message, residual=None, saddle=None):
        super().__init__(message)
        self.residual = residual
        self.saddle = saddle


class ParameterOverflowError(RuntimeError):
    """A derived quantity (step size, penalty weight) left the float range."""
