"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class ResourceLimitError(MemoryError):
    """A requested array would exceed the memory guard."""


class SingularityError(ZeroDivisionError):
    """Evaluation at a singular point, e.g. zero displacement."""
