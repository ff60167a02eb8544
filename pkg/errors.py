"""
Sub-Rayleigh Imaging - Error hierarchy
Every failure the library raises derives from SubRayleighError and carries
the process exit code the CLI reports for it.
"""


class SubRayleighError(Exception):
    """Base class for all simulator errors."""
    exit_code = 3


class DomainError(SubRayleighError, ValueError):
    """Argument outside the mathematical domain (non-finite, non-positive log input)."""


class RangeError(SubRayleighError, ValueError):
    """Argument outside the range an operation accepts."""


class ConvergenceError(SubRayleighError, ValueError):
    """Root finding or inversion could not reach the requested target."""


class ValidationError(SubRayleighError, ValueError):
    """Configuration or grid violates a type invariant."""


class ResolutionError(ValidationError):
    """Grid pitch too coarse to resolve the focusing kernel."""

    def __init__(self, message: str, required_grid: int):
        super().__init__(message)
        self.required_grid = required_grid


class RegimeError(SubRayleighError, ValueError):
    """Focused-spot condition required by the approximate N-photon engines is violated."""


class SizeError(SubRayleighError, ValueError):
    """Cost guard of an expensive engine exceeded."""


class GeometryError(SubRayleighError, ValueError):
    """Image features expected by a metric could not be located."""


class DegenerateImageError(SubRayleighError, ValueError):
    """Engine produced an image whose raw peak is not positive."""


class DataError(SubRayleighError, ValueError):
    """Pixel data unfit for writing (NaN, infinite or negative values)."""


class PgmParseError(SubRayleighError, ValueError):
    """Malformed PGM input; offset is the byte position where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class StorageError(SubRayleighError, OSError):
    """Reading or writing a file failed."""
    exit_code = 4


__all__ = [
    "SubRayleighError",
    "DomainError",
    "RangeError",
    "ConvergenceError",
    "ValidationError",
    "ResolutionError",
    "RegimeError",
    "SizeError",
    "GeometryError",
    "DegenerateImageError",
    "DataError",
    "PgmParseError",
    "StorageError",
]
