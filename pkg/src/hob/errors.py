"""Exception and warning types shared across the package."""


class HobError(Exception):
    """Base class for package-specific failures."""


class ConfigError(HobError, ValueError):
    """Invalid configuration, arguments, or input files (CLI exit code 2)."""


class DegenerateDataError(HobError, ValueError):
    """A sample cannot identify the requested parameters (e.g. no positive prices)."""


class BracketError(HobError, ValueError):
    """A bisection bracket does not straddle the target; carries endpoint evals."""

    def __init__(self, message: str, lo_eval=None, hi_eval=None):
        super().__init__(message)
        self.lo_eval = lo_eval
        self.hi_eval = hi_eval


class InfeasibleConstraintError(HobError):
    """The campaign constraint cannot be met on this replay (CLI exit code 3)."""


class NumericFailureError(HobError, ArithmeticError):
    """Training or iteration diverged: NaN loss, non-convergence (CLI exit code 4)."""


class DegenerateCurveWarning(UserWarning):
    """Power-law fit saw a (near-)flat curve and floored the exponent."""
