import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from idslab.models.config import ModelConfig  # noqa: E402
from idslab.models.geometry import FolnerBox  # noqa: E402
from idslab.operators.assembly import build_dirichlet  # noqa: E402
from idslab.utils import logger  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_logs(monkeypatch, tmp_path):
    monkeypatch.setattr(logger, "base_path", str(tmp_path / "logs"))
    monkeypatch.delenv(logger.OUTPUT_DIR_ENV, raising=False)


@pytest.fixture
def flat_line() -> ModelConfig:
    return ModelConfig(dimension=1, resolution=1, metric_amplitude=0.0, potential_amplitude=0.0)


@pytest.fixture
def disordered_plane() -> ModelConfig:
    return ModelConfig(dimension=2, resolution=2, metric_amplitude=0.3, potential_amplitude=1.0)


@pytest.fixture
def path_graph(flat_line):
    """Three-vertex Dirichlet path, H = tridiag(-1, 2, -1)."""
    return build_dirichlet(flat_line, 0, FolnerBox(dimension=1, radius=1))
