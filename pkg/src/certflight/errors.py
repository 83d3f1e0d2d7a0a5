"""Shared exception types."""


class ConfigError(ValueError):
    """A profile, plan, or config value is missing or inconsistent."""


class CalibrationError(ValueError):
    """Measurement data cannot support the requested fit."""


class LogFormatError(ValueError):
    """A log stream is unreadable as a whole (not just single bad lines)."""


class PaddingError(ValueError):
    """A certificate cannot be padded to the requested size.

    Carries the minimum achievable size in ``minimum_bytes`` when the
    target was too small.
    """

    def __init__(self, message, minimum_bytes=None):
        super().__init__(message)
        self.minimum_bytes = minimum_bytes
