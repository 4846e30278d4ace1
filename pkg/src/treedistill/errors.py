"""Exception types shared across the package."""


class TreedistillError(Exception):
    """Base class for all package errors."""


class ShapeError(TreedistillError, ValueError):
    """Array dimensions do not match what an operation requires."""


class InputError(TreedistillError, ValueError):
    """An argument value is outside an operation's domain."""


class SchemaError(InputError):
    """A CSV or config document is structurally invalid (e.g. missing label column)."""


class ParseError(InputError):
    """A cell could not be parsed; carries the offending row and column."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(InputError):
    """A configuration value is inconsistent (e.g. split ratios produce an empty split)."""


class DivergenceError(TreedistillError, RuntimeError):
    """Training produced a non-finite loss; carries the epoch where it happened."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class GramSingularError(TreedistillError, ArithmeticError):
    """A Gram matrix is singular (or too close to it) for the log-det penalty."""


class UndefinedMetricError(TreedistillError, ValueError):
    """A metric is undefined for the given inputs (e.g. AUC with one class)."""
