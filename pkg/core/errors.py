"""Exception hierarchy for prsguard."""


class PrsGuardError(Exception):
    """Base class for every error raised by prsguard."""


class ParameterError(PrsGuardError, ValueError):
    """An argument is out of range or has the wrong shape."""


class ConfigurationError(PrsGuardError):
    """A scenario or application configuration is invalid."""


class CapacityError(ConfigurationError):
    """Resource elements are insufficient for the requested allocation."""


class TrajectoryError(ConfigurationError):
    """A trajectory file could not be parsed."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class TopologyError(PrsGuardError):
    """A position cannot be placed in the deployed lattice."""


class MeasurementUnavailable(PrsGuardError):
    """Too few base stations were heard to form a measurement."""


class ExportError(PrsGuardError):
    """Results could not be written."""
