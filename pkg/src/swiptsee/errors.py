"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes do not agree with the system configuration."""


class UndefinedRatioError(ZeroDivisionError):
    """SEE denominator is zero (no circuit power and no transmit power)."""


class NumericalRangeError(ArithmeticError):
    """A closed form could not be evaluated to meaningful precision.

    ``diagnostics`` carries whatever intermediate quantities were available
    when evaluation was abandoned.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class QuadratureError(ArithmeticError):
    def __init__(self, message, achieved_tol=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class GridTooLargeError(ValueError):
    """Brute-force grid search refused because the dimension is too high."""


class ConfigError(ValueError):
    """Invalid experiment configuration file."""
