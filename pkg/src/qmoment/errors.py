"""Exception types shared across the package.

Every error carries a short ``category`` string; the command line prints it
as the first token of its one-line failure message.
"""


class QMomentError(Exception):
    category = "error"


class ValidationError(QMomentError, ValueError):
    category = "validation"


class DomainError(QMomentError, ValueError):
    category = "domain"


class PoleError(QMomentError, ZeroDivisionError):
    category = "pole"


class TailDivergenceError(QMomentError, ArithmeticError):
    category = "tail_divergence"


class PositivityError(QMomentError, ArithmeticError):
    category = "positivity"


class PrecisionOverflowError(QMomentError, ArithmeticError):
    category = "precision_overflow"


class InsufficientDataError(QMomentError, ValueError):
    category = "insufficient_data"


class TailWarning(UserWarning):
    """A truncated sum still has non-negligible terms at a window boundary."""
