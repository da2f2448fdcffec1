"""Exception types shared across the simulator."""


class MarketError(ValueError):
    """Malformed market data (range, distinctness, or shape violations)."""


class InputError(ValueError):
    """Malformed preference lists or matchings passed to an operation."""


class SizeError(ValueError):
    """Instance too large for an enumeration-based oracle."""


class ParameterError(ValueError):
    """Infeasible or out-of-range parameter."""


class ObservationError(ValueError):
    """Observation value outside the supported reward range."""


class ProtocolError(RuntimeError):
    """A policy emitted an action the round protocol forbids."""

    def __init__(self, message: str, round_index: int | None = None):
        if round_index is not None:
            message = f"round {round_index}: {message}"
        super().__init__(message)
        self.round_index = round_index


class ConfigError(ValueError):
    """Invalid experiment configuration."""
