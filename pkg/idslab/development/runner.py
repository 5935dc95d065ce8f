import json
import os
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ValidationError

from idslab import __version__
from idslab.decorator import EXPERIMENTS
from idslab.development import suites
from idslab.exceptions import UsageError
from idslab.models.experiment import ExperimentConfig, Manifest, ResultRecord
from idslab.utils import logger
from idslab.utils.logger import OUTPUT_DIR_ENV
from idslab.utils.save_artifact import save_artifact
from idslab.utils.tables import json_bytes

MANIFEST_FILE = "manifest.json"
TIMINGS_FILE = "timings.json"
LOG_DIR = "logs"
HASH_PREFIX = 12


class RunResult(BaseModel):
    run_dir: str
    manifest_path: str
    log_path: str
    manifest: Manifest
    wall_times: Dict[str, float]

    @property
    def passed(self) -> bool:
        return self.manifest.passed


def _field_path(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"]) or "<root>"


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a decoded config mapping; the error names the dotted path of the bad field."""
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        path = _field_path(e)
        raise UsageError(
            f"invalid configuration at '{path}': {e.errors()[0]['msg']}",
            field_path=path,
        ) from e


def load_config(path: str) -> ExperimentConfig:
    """Read an experiment configuration from a ``.toml`` or ``.json`` file."""
    config_path = Path(path)
    if not config_path.is_file():
        raise UsageError(f"configuration file not found: {path}")
    suffix = config_path.suffix.lower()
    try:
        if suffix == ".toml":
            with open(config_path, "rb") as f:
                raw = tomllib.load(f)
        elif suffix == ".json":
            with open(config_path, "r") as f:
                raw = json.load(f)
        else:
            raise UsageError(f"unsupported configuration format '{suffix}'; use .toml or .json")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise UsageError(f"could not parse {path}: {e}") from e
    if not isinstance(raw, dict):
        raise UsageError("configuration must be a table/object at the top level")
    return parse_config(raw)


def resolve_output_dir(config: ExperimentConfig, output_dir: Optional[str] = None) -> str:
    """Explicit argument, then ``IDSLAB_OUTPUT_DIR``, then the config's ``output_dir``."""
    return output_dir or os.getenv(OUTPUT_DIR_ENV) or config.output_dir


def run_config(config: ExperimentConfig, output_dir: Optional[str] = None) -> RunResult:
    """
    Run every experiment ``config.kind`` expands to and persist the run directory.

    The run directory is ``<output_dir>/<config hash[:12]>``. It holds one payload
    file per experiment output, ``manifest.json`` (byte-identical for identical
    configs) and ``timings.json`` with the wall times. The log goes to
    ``<output_dir>/logs/<config hash[:12]>/logs.txt``, outside the run directory, since
    it carries timestamps.

    Args:
        config (ExperimentConfig): Validated configuration.
        output_dir (str): Overrides the configured output root.

    Returns:
        RunResult: Manifest, its path and the wall times.
    """
    config_hash = config.digest()
    output_root = resolve_output_dir(config, output_dir)
    run_dir = os.path.join(output_root, config_hash[:HASH_PREFIX])
    log_dir = os.path.join(output_root, LOG_DIR, config_hash[:HASH_PREFIX])
    os.makedirs(run_dir, exist_ok=True)
    logger.set_base_path(log_dir)
    logger.info(f"run {config_hash[:HASH_PREFIX]} kind={config.kind.value} seeds={config.seed_list()}")

    records: List[ResultRecord] = []
    for kind in suites.suite_kinds(config.kind):
        records.append(EXPERIMENTS[kind](config, run_dir))

    manifest = Manifest(
        config_hash=config_hash,
        kind=config.kind.value,
        version=__version__,
        parallelism=config.parallelism,
        seeds=config.seed_list(),
        config=config.canonical(),
        records=records,
        passed=all(r.passed for r in records),
    )
    manifest_path, _ = save_artifact(
        MANIFEST_FILE, json_bytes(manifest.model_dump(mode="json")), base_dir=run_dir
    )
    wall_times = {r.kind: r.wall_time for r in records}
    save_artifact(TIMINGS_FILE, json_bytes(wall_times), base_dir=run_dir)
    logger.info(f"run {config_hash[:HASH_PREFIX]} {'passed' if manifest.passed else 'FAILED'}")
    return RunResult(
        run_dir=run_dir,
        manifest_path=manifest_path,
        log_path=os.path.join(log_dir, "logs.txt"),
        manifest=manifest,
        wall_times=wall_times,
    )


def run(config_path: str, output_dir: Optional[str] = None) -> RunResult:
    return run_config(load_config(config_path), output_dir)
