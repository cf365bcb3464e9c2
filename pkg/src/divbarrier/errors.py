"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter violates its domain; ``field`` names the offender."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InsufficientDataError(ValueError):
    """Not enough points to run a check."""


class EvaluationError(ArithmeticError):
    """A numeric evaluation overflowed or lost all precision."""


class ExtrapolationError(ValueError):
    """A query fell outside a cached grid; rebuild with a larger range."""


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the offending key path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class GridTooShortError(RuntimeError):
    """The derivative minimum sits on the right grid edge.

    ``suggested_x_max`` is the recommended replacement range.
    """

    def __init__(self, x_max, suggested_x_max):
        self.x_max = x_max
        self.suggested_x_max = suggested_x_max
        super().__init__(
            f"derivative minimum at the grid edge x_max={x_max:g}; "
            f"rebuild with x_max >= {suggested_x_max:g}"
        )


class DegenerateBarrierError(RuntimeError):
    """The scale derivative vanishes at the requested barrier."""
