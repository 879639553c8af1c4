"""Exception types shared across the package."""


class AmbientIDError(Exception):
    """Base class for all package errors."""


class Infeasible(AmbientIDError):
    """No steady-state operating point exists for the given parameters."""


class SingularFrequency(AmbientIDError):
    """A frequency grid point coincides with a pole of the admittance."""


class ZeroSignal(AmbientIDError):
    """A channel has (numerically) zero RMS, so an SNR cannot be applied."""


class StateBlowup(AmbientIDError):
    """Nonlinear integration left the physically meaningful region."""


class NonFiniteObjective(AmbientIDError):
    """The MAP objective evaluated to NaN or infinity."""


class ConfigError(AmbientIDError):
    """Invalid run configuration (CLI exit code 2)."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class DataError(AmbientIDError):
    """Missing or malformed data files (CLI exit code 3)."""
