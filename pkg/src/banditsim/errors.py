"""Exception types shared across the package."""


class BanditsimError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(BanditsimError):
    """A config or posterior document does not match the expected schema."""


class ConsistencyError(BanditsimError):
    """Two pieces of state that must agree (space vs. assignment, spec vs.
    config) do not."""


class UndefinedMetricError(BanditsimError):
    """A metric was requested on records that cannot support it."""


class SimulationError(BanditsimError):
    """A simulator failed to execute a trial."""


class ConfigError(SchemaError):
    """A run configuration file is missing, malformed, or self-inconsistent."""
