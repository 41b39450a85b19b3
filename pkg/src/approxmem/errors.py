class DomainError(ValueError):
    """A knob value, probability, address or index outside its domain."""


class ConfigurationError(ValueError):
    """A scenario or workload setup that cannot be simulated."""


class InfeasibleError(RuntimeError):
    """No configuration satisfies the requested QoS threshold."""
