"""Exception types shared across the package."""


class BoxcfError(Exception):
    """Base class for all package errors."""


class ParseError(BoxcfError):
    """Raised when a model dump cannot be parsed.

    The message names the offending location (tree / node path or byte
    offset) so callers can report actionable errors.
    """


class ModelConsistencyError(BoxcfError):
    """Raised when a parsed model violates a structural invariant,
    e.g. a contradictory split path producing an empty interval."""


class UnsupportedFeatureError(BoxcfError):
    """Raised for model constructs outside the numeric-split subset
    (categorical splits, non-numeric thresholds, unknown aggregations)."""


class DecompositionTooLargeError(BoxcfError):
    """Raised when a decomposition or set query would exceed the region cap."""

    def __init__(self, message: str, emitted: int, cap: int):
        super().__init__(message)
        self.emitted = emitted
        self.cap = cap


class QueryValidationError(BoxcfError):
    """Raised for malformed or contradictory counterfactual queries."""


class TimeBudgetExceededError(BoxcfError):
    """Raised when a search exceeds its wall-clock budget.

    Carries the partial telemetry collected so far.
    """

    def __init__(self, message: str, stats=None):
        super().__init__(message)
        self.stats = stats


class InternalSearchError(BoxcfError):
    """A search invariant failed (e.g. a returned point did not re-validate).

    This indicates a bug, never a user error.
    """
