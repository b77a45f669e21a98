"""idforge: identity resolution for version-control author records."""

__version__ = "0.1.0"
