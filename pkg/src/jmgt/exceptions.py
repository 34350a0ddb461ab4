"""Exception and warning types raised by the package."""


class ConfigurationError(ValueError):
    """Malformed grid, stepper, config-file or CLI setup.

    ``key`` names the offending config key when there is one.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class BlowUpError(RuntimeError):
    """Raised by the time stepper when the state stops being finite or bounded.

    The ``record`` attribute carries the diagnostic (time, step, offending norm).
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = dict(record or {})


class ResolutionWarning(UserWarning):
    """A spectral operation is close to or beyond what the grid resolves."""
