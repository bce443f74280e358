"""Exception hierarchy shared by all modules.

Every error class carries a stable CLI exit code; the table is rendered
into ``rtcorrect --help`` so scripts can branch on failure modes.
"""

from __future__ import annotations


class RtcorrectError(Exception):
    """Base class for all rtcorrect errors."""

    exit_code = 1


class InvalidArguments(RtcorrectError):
    """Bad command-line usage (same code argparse uses)."""

    exit_code = 2


class ParseError(RtcorrectError):
    """A file could not be parsed (message includes position where known)."""

    exit_code = 3


class ValidationError(RtcorrectError):
    """A configuration value violates its constraint (message names the field)."""

    exit_code = 4


class NonContiguousTime(RtcorrectError):
    """Time indices in an input series are not consecutive."""

    exit_code = 5


class NegativeCount(RtcorrectError):
    """A case count is negative."""

    exit_code = 6


class NegativeMass(RtcorrectError):
    """A generation-interval probability is negative."""

    exit_code = 7


class NotNormalized(RtcorrectError):
    """Generation-interval probabilities do not sum to 1."""

    exit_code = 8


class EmptySupport(RtcorrectError):
    """Generation interval has no probability mass."""

    exit_code = 9


class DimensionMismatch(RtcorrectError):
    """Group counts of two inputs disagree."""

    exit_code = 10


class InvalidConfig(RtcorrectError):
    """A simulation configuration violates an invariant."""

    exit_code = 11


class SeedExceedsPopulation(RtcorrectError):
    """Seed infections exceed the remaining susceptibles of their group."""

    exit_code = 12


class InvalidRates(RtcorrectError):
    """A detection rate lies outside (0, 1]."""

    exit_code = 13


class InvalidPrior(RtcorrectError):
    """A Beta prior has a non-positive shape parameter."""

    exit_code = 14


class EmptySamples(RtcorrectError):
    """A posterior operation received no draws."""

    exit_code = 15


class EmptyOverlap(RtcorrectError):
    """Two series share no defined time points in the requested range."""

    exit_code = 16


class WindowNotFound(RtcorrectError):
    """No detection-fraction transition window exists in the data."""

    exit_code = 17


#: All public error classes in exit-code order, for the CLI help table.
ERROR_CLASSES: tuple[type[RtcorrectError], ...] = (
    InvalidArguments,
    ParseError,
    ValidationError,
    NonContiguousTime,
    NegativeCount,
    NegativeMass,
    NotNormalized,
    EmptySupport,
    DimensionMismatch,
    InvalidConfig,
    SeedExceedsPopulation,
    InvalidRates,
    InvalidPrior,
    EmptySamples,
    EmptyOverlap,
    WindowNotFound,
)


def exit_code_table() -> str:
    """One line per error class: ``code  name  summary``."""
    lines = ["exit codes:", "  0   success", "  1   unexpected internal error"]
    for cls in ERROR_CLASSES:
        doc = (cls.__doc__ or "").strip().split("\n")[0]
        lines.append(f"  {cls.exit_code:<3d} {cls.__name__}: {doc}")
    return "\n".join(lines)
