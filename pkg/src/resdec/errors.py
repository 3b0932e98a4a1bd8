"""Exception types raised across the residual-decoding package."""


class ResDecError(Exception):
    """Base class for all package errors."""


class DegenerateDistribution(ResDecError):
    """A probability vector is unusable: NaN/inf mass, nonpositive total,
    or an all-(-inf) logit vector."""


class SupportMismatch(ResDecError):
    """Reference distribution assigns zero mass where the left argument
    has positive mass (KL undefined)."""


class DimensionError(ResDecError):
    """Operands have incompatible shapes or an out-of-range vocabulary."""


class EmptyPool(ResDecError):
    """A candidate pool ended up with no tokens."""


class OrderingError(ResDecError):
    """History records pushed out of step order."""


class EmptyHistory(ResDecError):
    """A window was requested but no history records exist."""


class ConfigError(ResDecError):
    """A configuration value is outside its documented range."""


class MaskError(ResDecError):
    """A plausibility mask excluded every candidate."""


class ParseError(ResDecError):
    """A trace file or protocol line could not be parsed."""


class SpecError(ResDecError):
    """A synthetic-task description violates its invariants."""
