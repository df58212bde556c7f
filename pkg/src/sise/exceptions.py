"""Exception and warning types shared across the package."""


class EstimationError(Exception):
    """Base class for every failure raised by this package."""


class EmptyDataError(EstimationError):
    """No usable observations were supplied."""


class EmptyFrameError(EstimationError):
    """A time frame has zero width (left >= right)."""


class MonotonicityViolation(EstimationError):
    """An individual's status switched from diseased back to disease-free."""


class NegativeTimeError(EstimationError):
    """An observation time is negative or not finite."""


class NoFeasibleSupportError(EstimationError):
    """An input interval contains no maximal-intersection support interval."""


class NegativeBandwidthError(EstimationError):
    """A kernel bandwidth is negative."""


class TooFewBinsError(EstimationError):
    """A gridded density has fewer bins than an operation requires."""


class ZeroLikelihoodError(EstimationError):
    """An observation has zero probability under the candidate density."""


class DegenerateDensityError(EstimationError):
    """A gridded density is unusable (no mass or too few bins)."""


class EmptyIntervalError(EstimationError):
    """An interval does not overlap the fitted grid."""


class ZeroPrevalenceError(EstimationError):
    """A prevalence value of zero (or less) cannot scale an error metric."""


class LengthMismatchError(EstimationError):
    """Paired arrays have different lengths."""


class InvalidConfigError(EstimationError):
    """A configuration value is out of its documented range."""


class ParseError(EstimationError):
    """A CSV or JSON input could not be parsed.

    Carries the 1-based line number when one is known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AllCensoredWarning(UserWarning):
    """Every observation is right-censored; the survival curve is degenerate."""


class NonConvergenceWarning(UserWarning):
    """An iterative fit stopped at its iteration cap before reaching tolerance."""


class StepTooCoarseWarning(UserWarning):
    """A support interval is narrower than the grid step and merges into one bin."""


class PenaltyFloorWarning(UserWarning):
    """The penalty base was <= 1, so the penalty weight was floored at zero."""
