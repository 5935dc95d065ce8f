import os

import numpy as np

from idslab.utils import logger
from idslab.utils.parallel import ordered_map
from idslab.utils.save_artifact import file_digest, save_artifact
from idslab.utils.tables import csv_bytes, json_bytes, read_csv


def test_logger_writes_log_file(monkeypatch, tmp_path):
    monkeypatch.setattr(logger, "base_path", str(tmp_path))

    logger.debug("hello world")

    log_file = tmp_path / "logs.txt"
    assert log_file.exists()
    assert "hello world" in log_file.read_text()


def test_set_base_path_redirects_log(monkeypatch, tmp_path):
    monkeypatch.setattr(logger, "base_path", str(tmp_path / "before"))
    logger.set_base_path(str(tmp_path / "after"))

    logger.info("moved")

    assert (tmp_path / "after" / "logs.txt").exists()


def test_save_artifact_persists_file(tmp_path):
    path, digest = save_artifact("file.txt", b"payload", subfolder="logs", base_dir=str(tmp_path))

    assert path == os.path.join(str(tmp_path), "logs", "file.txt")
    with open(path, "rb") as fh:
        assert fh.read() == b"payload"
    assert file_digest(path) == digest


def test_ordered_map_keeps_input_order():
    items = list(range(12))

    assert ordered_map(lambda x: x * x, items, workers=4) == [x * x for x in items]
    assert ordered_map(lambda x: x + 1, items) == [x + 1 for x in items]


def test_csv_bytes_writes_exact_floats(tmp_path):
    value = 1.0 / 3.0
    data = csv_bytes(["seed", "energy", "flag"], [(1, value, True), (np.int64(2), np.float64(0.5), False)])
    path = tmp_path / "t.csv"
    path.write_bytes(data)

    header, rows = read_csv(str(path))

    assert header == ["seed", "energy", "flag"]
    assert float(rows[0][1]) == value
    assert rows[1] == ["2", "0.5", "false"]


def test_json_bytes_is_canonical():
    left = json_bytes({"b": np.arange(2), "a": np.float64(1.5)})
    right = json_bytes({"a": 1.5, "b": [0, 1]})

    assert left == right
    assert left.endswith(b"\n")


def test_logger_keeps_every_line_across_threads(monkeypatch, tmp_path):
    monkeypatch.setattr(logger, "base_path", str(tmp_path))

    ordered_map(lambda k: logger.info(f"message {k}"), range(64), workers=8)

    lines = (tmp_path / "logs.txt").read_text().splitlines()
    assert len(lines) == 64
    assert sorted(int(line.rsplit(" ", 1)[1]) for line in lines) == list(range(64))
