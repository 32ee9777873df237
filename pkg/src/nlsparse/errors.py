"""Exception hierarchy shared across the package.

Two top-level families: :class:`InputError` for anything a caller got wrong
(dimensions, names, option ranges) and :class:`NumericalError` for
computations that failed despite valid input. The CLI maps the first family
to exit code 1 and the second to exit code 2.
"""


class NlsparseError(Exception):
    """Base class for all errors raised by nlsparse."""


class InputError(NlsparseError, ValueError):
    """Invalid caller input: bad dimensions, unknown names, out-of-range options."""


class NumericalError(NlsparseError, RuntimeError):
    """A computation failed numerically (non-finite values, exhausted searches)."""


class LineSearchError(NumericalError):
    """The solver line search could not find an acceptable step.

    ``result`` carries the partial fit reached before the failure, so callers
    can inspect the iterate.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DantzigInfeasibleError(NumericalError):
    """The decorrelation linear program has no feasible point at the given rho."""


class DegenerateVarianceError(NumericalError):
    """Estimated test variance is zero; the statistic is undefined."""


class SingularDenominatorError(NumericalError):
    """The one-step correction denominator is numerically zero."""


class EnumerationCapError(NumericalError):
    """Exhaustive support enumeration refused: dimension too large."""
