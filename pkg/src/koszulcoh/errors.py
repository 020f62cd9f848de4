"""Exception types shared across the package."""


class KoszulError(Exception):
    """Base class for all errors raised by koszulcoh."""


class ConfigurationError(KoszulError, ValueError):
    """Bad user input: non-prime modulus, malformed system, invalid config."""


class IntegrityError(KoszulError, RuntimeError):
    """An internal invariant was violated (e.g. a broken closure rule)."""


class TruncationError(KoszulError, ValueError):
    """A resolution was asked for data beyond its computed degree window."""


class UnsupportedInstanceError(KoszulError, ValueError):
    """The requested check is not available for this kind of system."""
