"""Exception hierarchy.

Two families matter to callers: :class:`DataError` (bad input, bad config)
and :class:`NumericalError` (the data are well-formed but the linear algebra
cannot proceed). The CLI maps them to exit codes 2 and 3.
"""


class SquareError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SquareError, ValueError):
    """Input data or configuration is malformed."""


class InvalidPartitionError(DataError):
    """Block sizes or index sets do not form a valid partition."""


class PatternError(DataError):
    """A dataset does not follow the block-wise observation pattern.

    Attributes
    ----------
    violations : list of (int, str)
        Offending case indices with a short description.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class CsvParseError(DataError):
    """A CSV field could not be parsed; carries line and column."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class PredictionInputError(DataError):
    """New data lack a covariate required by a weighted candidate."""


class ConfigError(DataError):
    """A run or simulation configuration is invalid."""


class NumericalError(SquareError, ArithmeticError):
    """Base class for failures of the numerical routines."""

    block = None

    def with_block(self, block):
        """Return the same error tagged with the data-block id it came from."""
        self.block = block
        if self.args:
            self.args = (f"D{block}: {self.args[0]}",) + self.args[1:]
        return self


class SingularDesignError(NumericalError):
    """Design matrix is rank deficient at the configured threshold."""

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class InsufficientCasesError(NumericalError):
    """Fewer training cases than parameters."""


class DegenerateCovariateError(NumericalError):
    """A covariate is constant, so no spline basis can be placed on it."""


class LeverageSingularityError(NumericalError):
    """A complete case has leverage numerically equal to one."""

    def __init__(self, message, case=None):
        super().__init__(message)
        self.case = case


class MalformedProblemError(NumericalError):
    """A quadratic program is not symmetric positive semidefinite."""


class ConvergenceError(NumericalError):
    """Iteration cap reached; ``best`` holds the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
