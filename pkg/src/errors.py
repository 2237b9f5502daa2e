"""
Exception hierarchy and CLI exit-code mapping
"""
from typing import Optional

import click


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class RpTsneError(Exception):
    """Base class for all errors raised by the package"""


class ParameterError(RpTsneError, ValueError):
    """An argument is outside its valid range"""


class DataError(RpTsneError, ValueError):
    """A dataset file or array cannot be used"""


class FormatError(DataError):
    """Unknown format tag or bad magic number"""


class TruncationError(DataError):
    """File is shorter or longer than its header declares"""


class AlignmentError(DataError):
    """Rows and labels do not line up"""


class SizeMismatchError(DataError):
    """raw_f64 payload size differs from the sidecar shape"""


class NonFiniteError(DataError):
    """Matrix contains NaN or Inf"""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message)
        self.row = row


class DegenerateLabelsError(DataError):
    """Scoring needs at least two distinct labels"""


class NumericError(RpTsneError, ArithmeticError):
    """A numerical routine failed"""


class EmbeddingDivergedError(NumericError):
    """NaN appeared in the embedding during optimization"""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception to the CLI exit code

    Args:
        exc: Raised exception

    Returns:
        1 for usage errors, 2 for data errors, 3 for numeric failures
    """
    if isinstance(exc, (ParameterError, click.UsageError)):
        return EXIT_USAGE
    if isinstance(exc, (DataError, FileNotFoundError)):
        return EXIT_DATA
    if isinstance(exc, (NumericError, FloatingPointError)):
        return EXIT_NUMERIC
    return EXIT_USAGE
