"""Exception types shared across the package."""


class SeqtestError(ValueError):
    """Base class for all input-validation errors raised by this package."""


class InvalidInstanceError(SeqtestError):
    """An instance (items, thresholds, halfspaces) fails validation."""


class InvalidInputError(SeqtestError):
    """An operation argument is malformed (bad realization, bad subset, ...)."""


class ParameterError(SeqtestError):
    """An algorithm parameter is outside its admissible range."""
