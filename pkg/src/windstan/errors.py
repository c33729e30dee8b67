"""Exception hierarchy shared by all windstan modules."""


class WindstanError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(WindstanError, ValueError):
    """Operands have incompatible dimensions. Messages name both shapes."""


class ConfigError(WindstanError, ValueError):
    """A configuration violates one of its invariants."""


class DataError(WindstanError, ValueError):
    """Input data is malformed, inconsistent, or insufficient."""


class NumericError(WindstanError, ArithmeticError):
    """A computation produced NaN or infinity where finite values are required."""
