"""Exception hierarchy shared across the package."""


class ChannelModelError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ChannelModelError):
    """Invalid configuration, preset name, or input file."""


class GeometryError(ChannelModelError):
    """Degenerate propagation geometry (coincident points, zero distance)."""


class NumericError(ChannelModelError):
    """A numerical computation failed or produced an unusable result."""
