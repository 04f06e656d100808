"""Exception hierarchy shared by all modules.

Callers can distinguish three failure kinds: malformed input text
(``FormatError``), structurally or semantically invalid models
(``ModelError``), and queries that exceed the configured exhaustive-search
limits (``CapacityError``).
"""


class GcpError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(GcpError):
    """Raised when input text cannot be parsed."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            message = f"{message} ({where})"
        super().__init__(message)
        self.line = line
        self.column = column


class ModelError(GcpError):
    """Raised on semantic violations: bad rules, unknown variables,
    incomplete states, unmet operation preconditions."""


class CapacityError(GcpError):
    """Raised when a query would exceed an exhaustive-search limit."""
