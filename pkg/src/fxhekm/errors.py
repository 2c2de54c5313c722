"""Exception types raised across the package."""


class FxhekmError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FxhekmError, ValueError):
    """Invalid parameters, shapes, or configuration values."""


class IdentificationError(FxhekmError):
    """Secondary-path identification diverged."""


class TheoryError(FxhekmError, ValueError):
    """A theoretical formula is undefined or outside its admissible region."""
