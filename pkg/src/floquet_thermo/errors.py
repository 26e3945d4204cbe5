"""Exception hierarchy shared by all modules."""


class FloquetThermoError(Exception):
    """Base class for every error raised by this package."""


class InvariantViolation(FloquetThermoError, ValueError):
    """An input does not satisfy a structural invariant (Hermiticity, trace, ...)."""


class DimensionMismatch(FloquetThermoError, ValueError):
    pass


class AccuracyError(FloquetThermoError):
    """Time stepping lost unitarity beyond tolerance."""


class TruncationError(FloquetThermoError):
    """Harmonic truncation too small to reproduce the Heisenberg-frame coupling."""


class UnsupportedChannelError(FloquetThermoError):
    """A zero quasi-frequency channel with nonzero harmonic index was requested."""


class NonUniqueSteadyState(FloquetThermoError):
    def __init__(self, dimension):
        self.dimension = dimension
        super().__init__(f"stationary manifold is degenerate (null-space dimension {dimension})")


class NumericalFailure(FloquetThermoError):
    """Propagated state left the set of density matrices."""


class ConfigError(FloquetThermoError, ValueError):
    """Scenario file failed validation. The message is prefixed with the offending key path."""
