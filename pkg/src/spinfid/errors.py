"""Exception hierarchy shared across the package.

Every error carries a short ``category`` used by the CLI for its
machine-parsable ``ERROR[<category>]:`` prefix.
"""


class SpinfidError(Exception):
    """Base class for all package errors."""

    category = "error"


class DomainError(SpinfidError, ValueError):
    """A physical quantity is outside its mathematical domain."""

    category = "domain"


class RangeError(DomainError):
    """Input is outside the validated range of an empirical correlation."""

    category = "range"


class ValidationError(SpinfidError, ValueError):
    """A configuration or data structure violates its invariants."""

    category = "validation"


class ParseError(ValidationError):
    """A file could not be parsed."""

    category = "parse"


class DegenerateFitError(SpinfidError):
    """The least-squares normal matrix is singular."""

    category = "fit"


class GuessFailureError(SpinfidError):
    """Automatic initial-guess construction failed; supply init manually."""

    category = "fit"
