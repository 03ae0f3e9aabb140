"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter, config file, or argument violates a model constraint."""


class IntegrationError(RuntimeError):
    """The ODE integrator produced a non-finite opinion value."""

    def __init__(self, message, epoch=None, opinions=None):
        super().__init__(message)
        self.epoch = epoch
        self.opinions = opinions
