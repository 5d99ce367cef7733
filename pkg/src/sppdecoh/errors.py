"""Exception types shared across the package.

The CLI maps these onto exit codes (validation 2, fit failure 3, I/O 4), so
library code should raise them instead of bare ValueError/RuntimeError when
the distinction matters.
"""


class SppDecohError(Exception):
    """Base class for all package errors."""


class DomainError(SppDecohError, ValueError):
    """An argument is outside its physical or mathematical domain."""


class InsufficientDataError(DomainError):
    """Too few points, or too little span, to perform the requested fit."""


class DegenerateModelError(DomainError):
    """Model parameters leave the requested quantity undefined."""


class FitFailureError(SppDecohError, RuntimeError):
    """An optimizer failed to converge; carries diagnostic context."""


class FileFormatError(SppDecohError, ValueError):
    """A data file failed to parse; message names the file and line."""


class ConfigError(SppDecohError, ValueError):
    """Invalid experiment configuration; message names the offending field."""
