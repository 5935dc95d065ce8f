from .exceptions import (
    ApplicationException,
    ArgumentError,
    IntegrityError,
    InternalError,
    LabBaseException,
    ResourceLimitError,
    UsageError,
)

__all__ = [
    "ApplicationException",
    "ArgumentError",
    "IntegrityError",
    "InternalError",
    "LabBaseException",
    "ResourceLimitError",
    "UsageError",
]
