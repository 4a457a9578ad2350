"""Exception hierarchy shared across the package."""


class CaccSimError(Exception):
    """Base class for all package errors."""


class NumericError(CaccSimError):
    """A non-finite value reached a numeric interface (upstream fault)."""


class ConfigError(CaccSimError):
    """Invalid run configuration or attack specification."""


class TrajectoryFormatError(ConfigError):
    """Malformed trajectory CSV; carries the offending row when known."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ModelError(CaccSimError):
    """Model file or model shape problems (load, version, dimensions)."""


class TrainingError(CaccSimError):
    """Training diverged or was given unusable data."""
