"""Exception types raised by the simulator."""


class HapsimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HapsimError):
    """Invalid scenario, site list, or config file."""


class CalibrationError(HapsimError):
    """Load calibration could not reach the requested target."""

    def __init__(self, message, low_count=None, low_value=None,
                 high_count=None, high_value=None):
        super().__init__(message)
        self.low_count = low_count
        self.low_value = low_value
        self.high_count = high_count
        self.high_value = high_value


class InfeasiblePointError(HapsimError):
    """Demand points that no single site could ever serve."""

    def __init__(self, message, offenders):
        super().__init__(message)
        self.offenders = list(offenders)


class MetricsError(HapsimError):
    """A metric is undefined for the given inputs (e.g. zero capacity)."""
