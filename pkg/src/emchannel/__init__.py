"""Stochastic electromagnetic channel models built from plane-wave angular responses."""
__version__ = "0.1.0"

from .errors import ConfigError, DomainError, ResourceLimitError, SingularityError
from .geometry import MediumParams
