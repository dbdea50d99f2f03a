"""Origin-destination networks from smart-card swipes."""
from ._accel import backend
from .errors import ConfigError, DataError, TransitNetError

__version__ = "0.1.0"

__all__ = ["backend", "ConfigError", "DataError", "TransitNetError", "__version__"]
