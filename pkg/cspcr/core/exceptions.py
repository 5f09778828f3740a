"""
Exception hierarchy for the library and the CLI exit-code contract.
"""


class CsPcrError(Exception):
    """Base error. `exit_code` is what the CLI returns for it."""

    exit_code: int = 1

    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(detail)


# ============== Input errors (exit 2) ==============

class InputError(CsPcrError):
    """Invalid user input, flags or files."""

    exit_code = 2


class EmptyDatasetError(InputError):
    """Dataset has no rows."""

    def __init__(self, detail: str = "Dataset is empty"):
        super().__init__(detail)


class NonFiniteError(InputError):
    """A NaN or infinite entry was found."""

    def __init__(self, row: int, field: str):
        self.row = row
        self.field = field
        super().__init__(f"Non-finite value at row {row}, field {field}")


class DimensionMismatchError(InputError):
    """Row dimensions disagree with the rest of the dataset."""

    def __init__(self, row: int, reason: str = "dimensions differ from row 0"):
        self.row = row
        super().__init__(f"Dimension mismatch at row {row}: {reason}")


class SplitError(InputError):
    """Requested split would leave one part empty."""


class ConfigurationError(InputError):
    """Inconsistent test or experiment configuration."""


class PopulationMismatchError(InputError):
    """An unlabeled pool carries the wrong population tag."""

    def __init__(self, expected: str, actual: str):
        super().__init__(f"Expected a {expected} pool, got a {actual} pool")


class FileFormatError(InputError):
    """A data, model or report file does not follow its format."""


# ============== Numerical errors (exit 3) ==============

class NumericalError(CsPcrError):
    """Numerical failure or degenerate input."""

    exit_code = 3


class AllZeroWeightsError(NumericalError):
    """Every spectral weight is zero: the null law is degenerate."""

    def __init__(
        self,
        detail: str = "All spectral weights are zero; the null covariance is degenerate",
    ):
        super().__init__(detail)


class SeparationError(NumericalError):
    """Logistic likelihood diverges because the classes are separable."""

    def __init__(self, detail: str = "Classes are perfectly separated"):
        super().__init__(f"{detail}; add regularization or more overlapping data")


class NonConvergenceError(NumericalError):
    """Iterative solver stopped without converging."""

    def __init__(self, detail: str, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(detail)


class SingularDesignError(NumericalError):
    """Cross-validation fold too small to fit."""


class NonFiniteStatisticError(NumericalError):
    """Test statistic returned NaN or infinity."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"Test statistic is not finite at row {row}")


class DegenerateWeightsError(NumericalError):
    """All importance weights are zero."""

    def __init__(self, detail: str = "All importance weights are zero"):
        super().__init__(detail)
