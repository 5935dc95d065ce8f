import pytest

from idslab.decorator import EXPERIMENTS, experiment
from idslab.exceptions import ResourceLimitError
from idslab.models.experiment import ExperimentConfig, ExperimentOutcome


def make_config() -> ExperimentConfig:
    return ExperimentConfig(kind="abstract", radii=[1])


def test_experiment_writes_payloads_and_record(tmp_path):
    @experiment("test-ok")
    def handler(config: ExperimentConfig) -> ExperimentOutcome:
        return ExperimentOutcome(payloads={"out.csv": b"a\n1\n"}, checks={"fine": True}, metrics={"n": 1})

    record = handler(make_config(), str(tmp_path))

    assert EXPERIMENTS["test-ok"] is handler
    assert record.passed
    assert record.kind == "test-ok"
    assert record.config_hash == make_config().digest()
    assert [p.name for p in record.payloads] == ["out.csv"]
    assert (tmp_path / "out.csv").read_bytes() == b"a\n1\n"
    assert record.wall_time >= 0.0
    assert "wall_time" not in record.model_dump()


def test_experiment_records_failed_check(tmp_path):
    @experiment("test-check")
    def handler(config: ExperimentConfig) -> ExperimentOutcome:
        return ExperimentOutcome(checks={"fine": True, "broken": False})

    record = handler(make_config(), str(tmp_path))

    assert not record.passed
    assert record.error is None


def test_experiment_wraps_exceptions(tmp_path):
    @experiment("test-boom")
    def handler(config: ExperimentConfig) -> ExperimentOutcome:
        raise RuntimeError("boom")

    record = handler(make_config(), str(tmp_path))

    assert not record.passed
    assert record.error is not None
    assert "RuntimeError" in record.error.type
    assert record.error.message == "boom"
    assert "Traceback" in record.error.traceback


def test_experiment_rejects_wrong_return_type(tmp_path):
    @experiment("test-type")
    def handler(config: ExperimentConfig):
        return {"not": "an outcome"}

    record = handler(make_config(), str(tmp_path))

    assert not record.passed
    assert "ExperimentOutcome" in record.error.message


def test_experiment_propagates_resource_errors(tmp_path):
    @experiment("test-resource")
    def handler(config: ExperimentConfig) -> ExperimentOutcome:
        raise ResourceLimitError("too big", ceiling="dense_ceiling", limit=1)

    with pytest.raises(ResourceLimitError):
        handler(make_config(), str(tmp_path))
