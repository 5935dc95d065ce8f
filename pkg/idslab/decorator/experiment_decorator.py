import traceback
from functools import wraps
from time import perf_counter
from typing import Callable, Dict

from idslab.exceptions.exceptions import (
    ApplicationException,
    ResourceLimitError,
    UsageError,
)
from idslab.models.experiment import (
    ErrorInfo,
    ExperimentConfig,
    ExperimentOutcome,
    PayloadEntry,
    ResultRecord,
)
from idslab.utils import logger
from idslab.utils.save_artifact import save_artifact
from idslab.utils.tables import to_jsonable

ExperimentFunction = Callable[[ExperimentConfig], ExperimentOutcome]
RecordFunction = Callable[[ExperimentConfig, str], ResultRecord]

EXPERIMENTS: Dict[str, RecordFunction] = {}


def experiment(kind: str):
    """
    Register ``func`` as the experiment ``kind``.

    The wrapped function is called as ``wrapper(config, run_dir)``: it runs the
    experiment, writes its payloads into ``run_dir`` from the calling thread and
    returns a :class:`ResultRecord`. Failures other than usage and resource errors
    are wrapped into an :class:`ApplicationException` and recorded as a failed run.
    """

    def decorator(func: ExperimentFunction) -> RecordFunction:
        @wraps(func)
        def wrapper(config: ExperimentConfig, run_dir: str) -> ResultRecord:
            config_hash = config.digest()
            start = perf_counter()
            outcome: ExperimentOutcome | None = None
            error_info: ApplicationException | None = None

            # 1. Execute the experiment
            try:
                outcome = func(config)
                if not isinstance(outcome, ExperimentOutcome):  # type: ignore
                    raise TypeError("Experiment must return an ExperimentOutcome instance.")
            except (UsageError, ResourceLimitError):
                raise
            except Exception as e:
                error_info = ApplicationException(
                    type_=str(type(e)),
                    message=str(e),
                    traceback=traceback.format_exc(),
                )
                logger.error(f"experiment {kind} failed: {e}")

            wall_time = perf_counter() - start

            # 2. Write payloads in name order
            entries = []
            if outcome is not None:
                for name in sorted(outcome.payloads):
                    path, digest = save_artifact(name, outcome.payloads[name], base_dir=run_dir)
                    entries.append(PayloadEntry(name=name, path=name, sha256=digest))

            # 3. Build the record
            if error_info is not None:
                return ResultRecord(
                    config_hash=config_hash,
                    kind=kind,
                    passed=False,
                    error=ErrorInfo(
                        type=error_info.type,
                        message=error_info.message,
                        traceback=error_info.traceback,
                    ),
                    wall_time=wall_time,
                )

            assert outcome is not None
            passed = all(outcome.checks.values())
            logger.info(f"experiment {kind} {'passed' if passed else 'FAILED'} in {wall_time:.3f}s")
            return ResultRecord(
                config_hash=config_hash,
                kind=kind,
                payloads=entries,
                checks=outcome.checks,
                metrics=to_jsonable(outcome.metrics),
                passed=passed,
                wall_time=wall_time,
            )

        wrapper.kind = kind  # type: ignore[attr-defined]
        EXPERIMENTS[kind] = wrapper
        return wrapper

    return decorator
