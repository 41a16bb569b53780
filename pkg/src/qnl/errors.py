"""Exception hierarchy shared by the library and the CLI."""


class QnlError(Exception):
    """Base class for all library errors."""

    exit_code = 10


class DomainError(QnlError, ValueError):
    """An operation was applied outside its mathematical domain (e.g. inv(0))."""

    exit_code = 3


class ParameterError(QnlError, ValueError):
    """Invalid or unsupported parameters (non-prime p, failed semiprimitivity, ...)."""

    exit_code = 3


class DegenerateParameterError(ParameterError):
    """Parameters for which the construction is empty (T would have no cosets)."""

    exit_code = 5


class BudgetError(QnlError):
    """A computation would exceed a configured size or search cap."""

    exit_code = 4


class RetryCapError(QnlError):
    """A randomized procedure exhausted its retry budget."""

    exit_code = 6


class FormatError(QnlError, ValueError):
    """Malformed input file."""

    exit_code = 7
