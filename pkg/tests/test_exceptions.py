import pickle

from idslab.exceptions.exceptions import (
    ApplicationException,
    ArgumentError,
    ResourceLimitError,
    UsageError,
)


def test_application_exception_pickling_roundtrip():
    exc = ApplicationException(type_="Custom", message="failure", traceback="trace")
    data = pickle.dumps(exc)
    loaded = pickle.loads(data)

    assert isinstance(loaded, ApplicationException)
    assert loaded.type == "Custom"
    assert loaded.message == "failure"
    assert loaded.traceback == "trace"


def test_argument_error_is_value_error():
    exc = ArgumentError("bad radius")

    assert isinstance(exc, ValueError)
    assert exc.message == "bad radius"
    assert exc.type == "ArgumentError"


def test_resource_limit_error_keeps_ceiling_through_pickle():
    exc = ResourceLimitError("too big", ceiling="dense_ceiling", limit=4096)
    loaded = pickle.loads(pickle.dumps(exc))

    assert loaded.ceiling == "dense_ceiling"
    assert loaded.limit == 4096
    assert loaded.message == "too big"


def test_usage_error_field_path():
    exc = UsageError("invalid", field_path="model.dimension")

    assert exc.field_path == "model.dimension"
    assert str(exc) == "invalid"
