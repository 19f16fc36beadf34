class DomainError(ValueError):
    """An argument lies outside the domain of a mathematical operation."""


class ConfigError(ValueError):
    """A configuration is malformed or inconsistent."""


class PreconditionError(ConfigError):
    """A scheme's validity bound is violated for the requested parameters."""


class NoCrossingError(DomainError):
    """The spectral gap of a mode is too small for a finite crossing time."""
