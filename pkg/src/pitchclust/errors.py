"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: usage errors exit 1, data/schema errors
exit 2, numeric failures exit 3.
"""


class PitchclustError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class UsageError(PitchclustError):
    """Bad invocation: unknown flags, inconsistent options, empty grids."""

    exit_code = 1


class DataError(PitchclustError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class InvalidInputError(DataError):
    """An argument violates an operation's precondition."""


class IncomparablePairError(DataError):
    """Two records share no commonly observed variable."""


class NumericError(PitchclustError):
    """Numerical failure: degenerate scales, eigensolver breakdown."""

    exit_code = 3


class ConstantColumnError(NumericError):
    """A column has zero spread and cannot be standardized alone."""


class ConstantGroupError(NumericError):
    """A whole composition group has zero pooled spread."""


class DegenerateGroupError(NumericError):
    """A dissimilarity group has zero dispersion across pairs."""


class DegenerateCalibrationError(NumericError):
    """A calibration pool (or stratum) has zero standard deviation."""


class UndefinedIndexError(NumericError):
    """The requested validity index is undefined for this clustering."""


class FitFailureError(NumericError):
    """No usable candidate survived a model fit."""
