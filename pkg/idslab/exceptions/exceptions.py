from typing import Any, Optional


class LabBaseException(Exception):
    def __init__(
        self,
        *args: Any,
        type_: Optional[str] = None,
        message: Optional[str] = None,
        traceback: Optional[str] = None,
    ):
        # Positional calls (raise ArgumentError("msg"), unpickling) carry the message first.
        if args and message is None:
            message = args[0]

        super().__init__(message)

        self.type = type_ or self.__class__.__name__
        self.message = message or ""
        self.traceback = traceback

    def __reduce__(self):  # type: ignore
        return (self.__class__, (self.message,), dict(self.__dict__))  # type: ignore

    def __setstate__(self, state):  # type: ignore
        for k, v in state.items():  # type: ignore
            setattr(self, k, v)  # type: ignore


class ApplicationException(LabBaseException):
    """Wraps any failure raised while an experiment was running."""


class ArgumentError(LabBaseException, ValueError):
    """Raised when an operation receives inputs outside its preconditions."""


class ResourceLimitError(LabBaseException):
    """Raised when a request exceeds a configured ceiling.

    Attributes:
        ceiling (str): Name of the ceiling that was hit (e.g. ``dense_ceiling``).
        limit (int | None): Configured value of that ceiling.
    """

    def __init__(
        self,
        *args: Any,
        ceiling: Optional[str] = None,
        limit: Optional[int] = None,
        **kwargs: Any,
    ):
        super().__init__(*args, **kwargs)
        self.ceiling = ceiling
        self.limit = limit


class InternalError(LabBaseException):
    """Raised when a computation produces a value that valid inputs cannot produce."""


class UsageError(LabBaseException):
    """Raised for invalid configuration files or command-line usage.

    Attributes:
        field_path (str | None): Dotted path of the offending configuration field.
    """

    def __init__(self, *args: Any, field_path: Optional[str] = None, **kwargs: Any):
        super().__init__(*args, **kwargs)
        self.field_path = field_path


class IntegrityError(LabBaseException):
    """Raised when a persisted payload is missing or does not match its digest."""
