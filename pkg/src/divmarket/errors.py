"""Exception hierarchy shared across the package."""


class DivMarketError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(DivMarketError, ValueError):
    """A constructor or operation received an out-of-range parameter."""


class DomainError(DivMarketError, ValueError):
    """A function was evaluated outside its open domain interval."""


class EvaluationError(DivMarketError, ArithmeticError):
    """A user-supplied handle returned a non-finite value."""


class QuadratureError(DivMarketError, ArithmeticError):
    """Adaptive quadrature failed to converge to the requested tolerance."""


class ConfigError(DivMarketError, ValueError):
    """An experiment config file is malformed or contains unknown keys."""
