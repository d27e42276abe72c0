class CondensityError(Exception):
    """Base class for errors raised by this package."""


class DegenerateTarget(CondensityError, ValueError):
    """The training target is constant, so min-max scaling is undefined."""


class TooFewSamples(CondensityError, ValueError):
    pass


class WidthMismatch(CondensityError, ValueError):
    pass


class Exhausted(CondensityError, RuntimeError):
    """The trainer has no training rounds left (or is not iterative)."""
