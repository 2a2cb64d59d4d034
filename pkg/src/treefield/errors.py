"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (parse -> 2, precondition -> 3,
numeric -> 4), so library code should raise the most specific class.
"""


class TreeFieldError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TreeFieldError):
    """Malformed input file or unparseable argument."""


class PreconditionError(TreeFieldError):
    """An operation was called outside its documented contract."""


class NumericError(TreeFieldError):
    """Overflow, pole, divergence or other runtime numeric failure."""
