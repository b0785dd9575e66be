"""Exception types shared across the package.

The CLI maps them onto exit codes: parameter/contract errors are usage
errors (1), :class:`DataFormatError` and ``OSError`` are I/O errors (2) and
:class:`NumericalError` is a numerical failure (3).
"""


class GfscError(Exception):
    """Base class for every error raised by gfsc."""


class ContractError(GfscError, ValueError):
    """An input violates a structural precondition (shape, symmetry, sign)."""


class ParameterError(GfscError, ValueError):
    """A scalar parameter is out of its admissible range."""


class NumericalError(GfscError, ArithmeticError):
    """A factorization or solve failed on numerically bad input."""


class DataFormatError(GfscError, ValueError):
    """A data file could not be parsed."""
