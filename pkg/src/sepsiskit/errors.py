class DomainError(ValueError):
    """Input violates an operation's stated precondition or domain rule."""


class ConfigError(ValueError):
    """Invalid configuration value or unknown hyperparameter key."""


class StateError(RuntimeError):
    """Operation called on an object in the wrong state (e.g. unfitted model)."""
