"""Exception hierarchy for data, re-sampling, and evaluation errors.

The CLI maps any :class:`DiversampleError` to exit code 2 and prints the
class name verbatim, so subclass names are part of the interface.
"""


class DiversampleError(Exception):
    """Base class for all validation and data errors raised by this package."""


# -- dataset loading / manipulation ------------------------------------------

class MissingColumnError(DiversampleError):
    """The requested label column is absent from the CSV header."""


class NonNumericCellError(DiversampleError):
    """A feature cell failed to parse as a finite number."""

    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"non-numeric value {value!r} at row {row}, column {column!r}"
        )


class EmptyFileError(DiversampleError):
    """The CSV has no header or no data rows."""


class ClassTooSmallError(DiversampleError):
    """A class has too few instances for a stratified split."""


class LevelNotBelowCurrentError(DiversampleError):
    """Requested imbalance level is not below the current minority fraction."""


class TooFewMinorityRemainingError(DiversampleError):
    """Imbalance manipulation would leave fewer than 6 minority instances."""


# -- diversity core ------------------------------------------------------------

class SingularMatrixError(DiversampleError):
    """The similarity matrix is not invertible (duplicate rows with ridge 0)."""


class NonFinitePointError(DiversampleError):
    """A point matrix contains NaN or infinite values."""


class DegenerateDiagonalError(DiversampleError):
    """The maintained inverse lost positive-definiteness beyond repair."""


class RTooLargeError(DiversampleError):
    """Requested selection size exceeds the number of available instances."""


# -- re-sampling ----------------------------------------------------------------

class NoMinorityError(DiversampleError):
    """Over-sampling requires at least one minority instance."""


class MajorityTooSmallError(DiversampleError):
    """Under-sampling target exceeds the available majority count."""


class TooFewMinorityForKError(DiversampleError):
    """SMOTE needs at least k+1 minority instances."""


class RatioInfeasibleError(DiversampleError):
    """A hybrid size ratio produces per-class targets that cannot be met."""


# -- classifiers ----------------------------------------------------------------

class SingleClassTrainingSetError(DiversampleError):
    """Classifier fitting needs both classes present."""


class KTooLargeError(DiversampleError):
    """k exceeds the number of training instances."""


class DimensionMismatchError(DiversampleError):
    """Prediction data dimension differs from the training dimension."""


# -- SORT case study ----------------------------------------------------------------

class InvalidFieldError(DiversampleError):
    """A patient record field is outside its closed value set."""


# -- evaluation -------------------------------------------------------------------

class LengthMismatchError(DiversampleError):
    """Paired sequences have different lengths."""


class NoPositivesError(DiversampleError):
    """PR metrics are undefined without positive labels."""


class AllZeroDifferencesError(DiversampleError):
    """All paired differences are zero; the signed-rank test is undefined."""


class ExperimentCellError(DiversampleError):
    """An experiment cell failed; carries the cell identity in the message."""
