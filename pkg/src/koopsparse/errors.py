"""Exception types shared across the package."""


class NumericError(RuntimeError):
    """A computation produced non-finite values or broke down numerically."""


class RankError(NumericError):
    """A matrix required to be invertible (or of usable rank) was not."""


class UnsupportedModelError(ValueError):
    """An operation was asked to handle a system model it does not support."""
