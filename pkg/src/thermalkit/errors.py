"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific type that applies rather than a bare ValueError.
"""

from __future__ import annotations


class ThermalkitError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(ThermalkitError, ValueError):
    """A physical parameter, observable, or config value is malformed."""


class SizeRefusalError(ThermalkitError):
    """A request would exceed a hard size limit (dense matrices, replica
    dimension, exact traces) and is refused rather than attempted."""


class InsufficientDataError(ThermalkitError):
    """A fit or estimate was asked for with too few usable data points."""


class DegenerateInputError(InsufficientDataError):
    """Regression input has fewer than two distinct abscissae."""
