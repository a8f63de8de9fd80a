"""Exception types raised across the toolkit."""


class InvalidInputError(ValueError):
    """An argument violates an operation's precondition."""


class OutOfRangeError(InvalidInputError):
    """A modulus lies outside the invertible range of the amplifier."""


class AdaptationError(RuntimeError):
    """LUT adaptation diverged."""
