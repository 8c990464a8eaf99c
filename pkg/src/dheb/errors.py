"""Exception types shared across the package."""


class DhebError(Exception):
    """Base class for all package errors."""


class IngestError(DhebError):
    """Raised when a CSV file cannot be ingested (bad header, malformed row)."""


class EmptyNodeError(DhebError):
    """Raised when an operation needs at least one observation in a node."""


class InsufficientDataError(DhebError):
    """Raised when a node has too few observations to estimate a quantity.

    Callers are expected to catch this and apply their fallback policy
    (typically: inherit the parent node's estimate).
    """


class ModelFormatError(DhebError):
    """Raised when a persisted model file cannot be parsed or validated."""


class ConfigError(DhebError):
    """Raised for invalid configuration values."""
