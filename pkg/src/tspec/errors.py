"""Exception types raised across the package.

Every failure mode that callers are expected to handle maps to one class
here, all derived from :class:`TspecError` so that command-line entry
points can catch the family in one clause.
"""

from __future__ import annotations

__all__ = [
    "TspecError",
    "InvalidGrid",
    "EigFailure",
    "NoBracket",
    "SingularBorder",
    "SaturatedCount",
    "NoNegativeDirection",
    "NoSignChange",
    "KernelNotSimple",
    "SingularBlock",
    "InvalidSpeed",
    "ProfileNotPositive",
    "HypEulerViolated",
    "BadProfileFile",
    "NewtonDiverged",
    "ShiftSingular",
    "NoConvergence",
    "ConfigError",
]


class TspecError(Exception):
    """Base class for all package-specific errors."""


class InvalidGrid(TspecError):
    """Grid parameters are unusable (too few nodes, nonpositive width)."""


class EigFailure(TspecError):
    """The dense symmetric eigensolver failed or missed its residual contract."""


class NoBracket(TspecError):
    """Bisection was started on an interval without a sign change."""


class SingularBorder(TspecError):
    """A bordered (augmented) linear system is numerically singular."""


class SaturatedCount(TspecError):
    """Every requested eigenvalue lay below the negativity threshold; request more."""


class NoNegativeDirection(TspecError):
    """The operator at zero wavenumber has no eigenvalue below the threshold."""


class NoSignChange(TspecError):
    """The smallest eigenvalue never crosses zero inside the scan range."""


class KernelNotSimple(TspecError):
    """The kernel window at the crossing holds more than one eigenvalue,
    or the rest of the spectrum sits too close to it."""


class SingularBlock(TspecError):
    """A diagonal block that must be inverted is numerically singular."""


class InvalidSpeed(TspecError):
    """The requested wave speed admits no profile of the requested kind."""


class ProfileNotPositive(TspecError):
    """A density profile fails strict positivity on the grid."""


class HypEulerViolated(TspecError):
    """The far-field hyperbolicity condition fails, so the essential
    spectrum has no positive floor."""


class BadProfileFile(TspecError):
    """A tabulated profile file cannot be parsed or fails its sanity checks."""


class NewtonDiverged(TspecError):
    """Newton continuation failed to converge at some step of the schedule."""


class ShiftSingular(TspecError):
    """The shifted pencil matrix is singular and retries were exhausted."""


class NoConvergence(TspecError):
    """Inverse iteration on the pencil did not meet its residual target."""


class ConfigError(TspecError):
    """A run configuration file is missing, malformed, or inconsistent."""
