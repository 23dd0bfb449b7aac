"""Exception types shared across the package."""


class TampError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(TampError):
    """Malformed input data: environment files, plans, configs."""


class SpecError(ValidationError):
    """Problems with a task formula."""


class SpecSyntaxError(SpecError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class SpecShapeError(SpecError):
    """Formula is syntactically fine but outside the supported fragment."""


class UnknownPropositionError(SpecError):
    """A formula names a proposition the environment does not define."""


class FiringError(TampError):
    """A transition was fired while not enabled."""

    def __init__(self, transition, place, have, step=None):
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"transition {transition} not enabled{where}: "
            f"place {place} holds {have} token(s), needs 1"
        )
        self.transition = transition
        self.place = place
        self.step = step


class StateBudgetError(TampError):
    """A bounded search exceeded its configured state budget."""

    def __init__(self, budget, what="search"):
        super().__init__(f"{what} exceeded the state budget of {budget}")
        self.budget = budget


class CacheError(TampError):
    """Problems reading a persisted basis graph."""


class CacheFormatError(CacheError):
    """File is truncated or not a cache container at all."""


class CacheVersionError(CacheError):
    def __init__(self, found, expected):
        super().__init__(f"cache format version {found}, this build reads {expected}")
        self.found = found
        self.expected = expected


class CacheDigestError(CacheError):
    def __init__(self, found, expected):
        super().__init__(
            "cache was built for a different model "
            f"(digest {found[:12]}.. != {expected[:12]}..)"
        )
        self.found = found
        self.expected = expected


class IntegrityError(TampError):
    """Internal consistency check failed; indicates a bug or corrupt input."""
