"""Exception types shared across the solver toolkit."""


class ConfigError(ValueError):
    """A solver or criterion configuration violates its preconditions."""


class InvalidStartError(ConfigError):
    """The starting point lies outside the effective domain of the nonsmooth part."""


class NumericFailure(RuntimeError):
    """An iterative numerical routine failed to converge within its cap."""


class GrowthOverflowError(OverflowError):
    """The coefficient sum exceeded the floating-point safety limit."""


class CertificateUndefinedError(ValueError):
    """A certificate was requested at an iterate where it is not defined (k = 0)."""
