"""Exception hierarchy.

Validation errors (bad inputs, malformed files, out-of-domain config) are
distinguished from numerical failures so the CLI can map them to different
exit codes.
"""


class QavbError(Exception):
    """Base class for all package errors."""


class ValidationError(QavbError, ValueError):
    """Input, configuration, or file-content validation failure."""


class DatasetFormatError(ValidationError):
    """Malformed dataset file; message carries line/section diagnostics."""


class NumericalError(QavbError, ArithmeticError):
    """Numerical failure inside a solver kernel (overflow, non-SPD, ...)."""


class DegeneratePosteriorError(NumericalError):
    """Posterior hyperparameters at or below the Wishart degrees-of-freedom
    boundary where expected log-determinants are undefined."""
