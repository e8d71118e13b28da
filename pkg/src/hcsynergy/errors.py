"""Exception hierarchy shared by all modules.

Everything derives from ``SynergyError`` so callers (and the CLI) can catch
domain/data problems in one place without swallowing programming errors.
"""


class SynergyError(ValueError):
    """Base class for errors caused by invalid inputs or data."""


class DomainError(SynergyError):
    """A value lies outside the domain of the requested computation."""


class UndefinedRatio(DomainError):
    """A ratio has a zero denominator and a non-positive numerator."""


class UnboundedInterval(DomainError):
    """Fieller's confidence set is not a bounded interval."""


class ConfigError(SynergyError):
    """An inconsistent configuration (metric spec, simulation config)."""


class DataError(SynergyError):
    """A dataset row fails schema or bound validation.

    ``row`` is the 1-based line number in the source file when known.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class RankError(SynergyError):
    """The fixed-effects design matrix is rank deficient."""
