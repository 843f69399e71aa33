"""Exception hierarchy shared by all tavi modules."""


class TaviError(Exception):
    """Base class for every error raised by this package."""


class NotSkew(TaviError, ValueError):
    """A matrix handed to ``vee`` is not skew-symmetric."""


class NotRotation(TaviError, ValueError):
    """A matrix fails the SO(3) membership checks."""


class NoConvergence(TaviError, ArithmeticError):
    """An iterative linear-algebra routine did not converge."""


class NonpositiveTime(TaviError, ValueError):
    """A physical time at or below zero was passed where t > 0 is required."""


class DimensionMismatch(TaviError, ValueError):
    """Vector length does not match the objective dimension."""


class ConfigInvalid(TaviError, ValueError):
    """A run configuration failed validation."""


class MismatchedProblem(TaviError, ValueError):
    """Runs being compared do not share the same problem instance."""


class StepTooLarge(TaviError, ArithmeticError):
    """The explicit SO(3) update needs ``|a_k| < 1``; the fictive step must shrink."""

    def __init__(self, message, norm=None, iteration=None):
        super().__init__(message)
        self.norm = norm
        self.iteration = iteration


class NonFinite(TaviError, FloatingPointError):
    """A stepper produced inf/nan, i.e. the run diverged."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
