"""Exception hierarchy shared by all modules."""


class WeightJumpError(Exception):
    """Base class for every error raised by this package."""


class SupportError(WeightJumpError, ValueError):
    """A state lies outside the support of a density that must cover it."""


class InvalidWeightError(WeightJumpError, ValueError):
    """A sojourn weight is zero, negative or not finite."""


class TimeModeError(WeightJumpError, ValueError):
    """Continuous/discrete time mismatch (e.g. fractional weight in discrete mode)."""


class PathExhaustedError(WeightJumpError, IndexError):
    """A query time lies at or beyond the last epoch of a finite path."""


class ConfigurationError(WeightJumpError, ValueError):
    """A sampler or procedure was set up with inconsistent ingredients."""


class UnsupportedLawError(WeightJumpError, NotImplementedError):
    """The sojourn law lacks a closed form needed by the requested operation."""


class BoundedHazardError(WeightJumpError, ValueError):
    """The hazard floor is not strictly positive."""


class InvalidFloorError(WeightJumpError, ValueError):
    """An accept-reject ratio exceeded one, so the declared floor is wrong."""


class UndefinedAnchorError(WeightJumpError, ValueError):
    """A proposal in an MH trace has no accepted state before it."""


class DimensionError(WeightJumpError, ValueError):
    """Vector arguments have incompatible lengths."""
