"""Exception hierarchy shared by all modules."""


class ArbcError(Exception):
    """Base class for simulator errors."""


class DomainError(ArbcError, ValueError):
    """An input lies outside the domain of a model equation."""


class ConfigError(ArbcError, ValueError):
    """Invalid configuration; ``key`` names the offending entry when known."""

    def __init__(self, message, key=None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class OutOfRangeError(DomainError):
    """Lookup outside the tabulated range (no extrapolation)."""


class DegenerateInputError(DomainError):
    """Input leaves nothing to compute, e.g. zero incident power."""


class StateError(ArbcError, RuntimeError):
    """Operation not allowed in the current state."""


class UnreachableConversionError(ArbcError):
    """The converter cannot reach the requested voltage ratio."""


class InsufficientPowerError(ArbcError):
    """Requested converter output exceeds the available input power."""


class SupplyLimitError(ArbcError):
    """Required supply power exceeds the configured bound."""

    def __init__(self, message, tick=None):
        self.tick = tick
        if tick is not None:
            message = f"tick {tick}: {message}"
        super().__init__(message)


class ComparisonError(ArbcError, ValueError):
    """Session reports that cannot be compared."""
