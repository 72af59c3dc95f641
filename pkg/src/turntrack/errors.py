"""Exception hierarchy shared by the tracking modules."""

from __future__ import annotations


class TrackingError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(TrackingError):
    """A geometric or linear-algebra degeneracy made a result meaningless."""


class DegenerateRadius(NumericalError):
    """Target position coincides with the curvature center."""


class DegenerateIncrements(NumericalError):
    """Position increments are too small to define a turn."""


class SingularInnovation(NumericalError):
    """The innovation covariance R + C P C^T could not be inverted."""


class BadCovariance(TrackingError, ValueError):
    """A covariance matrix is not symmetric positive (semi-)definite."""


class NotInitialized(TrackingError):
    """A filter operation was attempted before initialization."""


class InsufficientData(TrackingError):
    """Not enough observations for the requested operation."""


class NonMonotoneTime(TrackingError, ValueError):
    """Timestamps did not strictly increase."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(TrackingError, ValueError):
    """Invalid run or scenario configuration."""


class ParseError(TrackingError, ValueError):
    """Malformed input file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AlignmentError(TrackingError):
    """A predicted timestamp has no matching truth sample."""


class LengthMismatch(TrackingError, ValueError):
    """Two series that must be paired have different lengths."""


class NonUniformSampling(TrackingError, ValueError):
    """Observation intervals are too irregular for a single turn rate."""
