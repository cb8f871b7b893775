"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A circuit, model or experiment was wired inconsistently."""


class CapabilityError(RuntimeError):
    """The request is valid but outside what the simulator supports."""


class IngestionError(ValueError):
    """An input file could not be parsed into a dataset."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
