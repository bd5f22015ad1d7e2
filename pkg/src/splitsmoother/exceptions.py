"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Inputs whose shapes are inconsistent with the declared model sizes."""


class NumericalError(RuntimeError):
    """Non-finite values or failed factorizations during a solve."""


class ProblemTooLargeError(RuntimeError):
    """Dense batch path refused: the problem would exhaust memory."""
