import json
import os

import pytest

from idslab import __version__
from idslab.development.cli import EXIT_INTEGRITY, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, main
from idslab.development.report import HEADER, render_report
from idslab.development.runner import MANIFEST_FILE, TIMINGS_FILE, load_config, parse_config, run_config
from idslab.development.selftest import run_selftest
from idslab.exceptions import IntegrityError, UsageError
from idslab.heat.lab import default_margin
from idslab.models.experiment import Manifest
from idslab.utils.save_artifact import save_artifact
from idslab.utils.tables import json_bytes, read_csv

MINIMAL = {
    "model": {"dimension": 1, "resolution": 1, "metric_amplitude": 0.0, "potential_amplitude": 0.0},
    "kind": "ids-exhaustion",
    "radii": [1],
    "seeds": [0],
    "grids": {"energies": [0.0, 1.0, 10.0], "times": [1.0]},
}

MINIMAL_TOML = """
kind = "ids-exhaustion"
radii = [1]
seeds = [0]

[model]
dimension = 1
resolution = 1
metric_amplitude = 0.0
potential_amplitude = 0.0

[grids]
energies = [0.0, 1.0, 10.0]
times = [1.0]
"""


@pytest.fixture
def minimal_run(tmp_path):
    return run_config(parse_config(MINIMAL), str(tmp_path / "runs"))


def _payload(result, name):
    for record in result.manifest.records:
        for entry in record.payloads:
            if entry.name == name:
                return os.path.join(result.run_dir, entry.path)
    raise KeyError(name)


def test_minimal_run_writes_counting_table(minimal_run):
    header, rows = read_csv(_payload(minimal_run, "ids_exhaustion.csv"))

    assert header == ["seed", "radius", "energy", "N"]
    assert len(rows) == 3
    assert [float(r[3]) for r in rows] == pytest.approx([0.0, 1 / 3, 1.0])
    assert minimal_run.passed
    assert os.path.basename(minimal_run.run_dir) == minimal_run.manifest.config_hash[:12]
    assert os.path.isfile(os.path.join(minimal_run.run_dir, TIMINGS_FILE))


def test_identical_configs_give_identical_manifests(tmp_path):
    first = run_config(parse_config(MINIMAL), str(tmp_path / "a"))
    second = run_config(parse_config(dict(reversed(list(MINIMAL.items())))), str(tmp_path / "b"))

    with open(first.manifest_path, "rb") as f, open(second.manifest_path, "rb") as g:
        assert f.read() == g.read()
    assert "wall_time" not in json.loads(open(first.manifest_path).read())["records"][0]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("IDSLAB_OUTPUT_DIR", str(tmp_path / "env"))

    result = run_config(parse_config(MINIMAL))

    assert result.run_dir.startswith(str(tmp_path / "env"))


def test_load_config_toml_matches_json(tmp_path):
    toml_path = tmp_path / "run.toml"
    toml_path.write_text(MINIMAL_TOML)
    json_path = tmp_path / "run.json"
    json_path.write_text(json.dumps(MINIMAL))

    assert load_config(str(toml_path)).digest() == load_config(str(json_path)).digest()


@pytest.mark.parametrize(
    "raw, field_path",
    [
        ({**MINIMAL, "model": {"dimension": 0}}, "model.dimension"),
        ({**MINIMAL, "tolerence": {}}, "tolerence"),
        ({**MINIMAL, "kind": "everything"}, "kind"),
        ({**MINIMAL, "grids": {"thickneses": [1.0]}}, "grids.thickneses"),
    ],
)
def test_invalid_config_names_the_field(raw, field_path):
    with pytest.raises(UsageError) as exc_info:
        parse_config(raw)

    assert exc_info.value.field_path == field_path


def test_load_config_rejects_unknown_format(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("kind: laplace\n")

    with pytest.raises(UsageError):
        load_config(str(path))
    with pytest.raises(UsageError):
        load_config(str(tmp_path / "missing.toml"))


def test_report_lists_quantiles(minimal_run):
    text = render_report(minimal_run.manifest_path)
    lines = text.splitlines()
    start = lines.index("# counting functions N^j at energy-grid quantiles")

    assert text.startswith(HEADER)
    assert "ids-exhaustion" in text
    assert "mean_N" in lines[start + 1]
    assert all(line.split()[0] == "0" for line in lines[start + 2 : start + 7])
    assert lines[start + 7] == ""


def _section(text, title):
    lines = text.splitlines()
    start = lines.index(title)
    end = next((i for i in range(start + 1, len(lines)) if not lines[i]), len(lines))
    return [line.split() for line in lines[start + 1 : end]]


def test_report_shows_convergence_and_metrics(minimal_run):
    text = render_report(minimal_run.manifest_path)

    convergence = _section(text, "# exhaustion along j: Cauchy step, cross-seed spread, Dirichlet vs free")
    assert convergence[0] == ["j", "radius", "max_cauchy", "std_median", "std_max", "free_gap"]
    assert convergence[1] == ["0", "1", "-", "0", "0", "-"]

    metrics = _section(text, "# metrics (recorded, not gating)")
    record = minimal_run.manifest.records[0]
    assert [row[1] for row in metrics[1:]] == sorted(record.metrics)
    assert all(row[0] == "ids-exhaustion" for row in metrics[1:])


def test_report_shows_free_trace_gap_and_nftb_tables(tmp_path):
    grids = {"energies": [0.0, 1.0, 10.0], "times": [0.5, 1.0], "thicknesses": [0.5, 1.0]}
    free = run_config(parse_config({**MINIMAL, "kind": "ids-free", "radii": [1, 2], "margin": 2}), str(tmp_path))
    laplace = run_config(
        parse_config({**MINIMAL, "kind": "laplace", "radii": [1, 2, 4], "margin": 4, "grids": grids}), str(tmp_path)
    )
    nftb = run_config(
        parse_config({**MINIMAL, "kind": "nftb", "radii": [1], "grids": grids}), str(tmp_path)
    )

    free_rows = _section(render_report(free.manifest_path), "# Dirichlet vs free counting functions")
    assert free_rows[0] == ["radius", "sup_gap"]
    assert [row[0] for row in free_rows[1:]] == ["1", "2"]

    gap_rows = _section(
        render_report(laplace.manifest_path), "# trace gaps against the boundary-layer ratio at thickness h(t)"
    )
    assert gap_rows[0] == ["time", "radius", "thickness", "ratio", "mean_gap", "max_gap", "kappa"]
    assert [(row[0], row[1]) for row in gap_rows[1:]] == [
        ("0.5", "1"), ("0.5", "2"), ("0.5", "4"), ("1", "1"), ("1", "2"), ("1", "4"),
    ]
    assert laplace.manifest.records[0].checks["trace_gap_controlled"]
    assert sorted(laplace.manifest.records[0].metrics["kappa"]) == ["0.5", "1"]

    nftb_rows = _section(render_report(nftb.manifest_path), "# not feeling the boundary: core kernel gap per thickness")
    assert [row[0] for row in nftb_rows[1:]] == ["0.5", "1"]
    assert all(row[-1] == "1" for row in nftb_rows[1:])


def test_free_and_laplace_default_to_the_nftb_margin(tmp_path):
    grids = {"energies": [0.0, 1.0, 10.0], "times": [0.5], "thicknesses": [0.5]}
    base = {**MINIMAL, "radii": [1], "time": 0.5, "grids": grids}

    free = run_config(parse_config({**base, "kind": "ids-free"}), str(tmp_path))
    laplace = run_config(parse_config({**base, "kind": "laplace"}), str(tmp_path))

    assert default_margin(0.5, [0.5]) == 8
    assert free.manifest.records[0].metrics["margin"] == 8
    assert laplace.manifest.records[0].metrics["margin"] == 8
    _, rows = read_csv(_payload(laplace, "trace_gap.csv"))
    assert {row[3] for row in rows} == {"8"}


def test_log_file_stays_outside_run_directory(tmp_path):
    first = run_config(parse_config(MINIMAL), str(tmp_path / "a"))
    second = run_config(parse_config(MINIMAL), str(tmp_path / "b"))

    assert os.path.isfile(first.log_path)
    assert not first.log_path.startswith(first.run_dir + os.sep)
    assert "logs.txt" not in os.listdir(first.run_dir)
    assert sorted(os.listdir(first.run_dir)) == sorted(os.listdir(second.run_dir))
    for name in os.listdir(first.run_dir):
        if name != TIMINGS_FILE:
            with open(os.path.join(first.run_dir, name), "rb") as f, open(os.path.join(second.run_dir, name), "rb") as g:
                assert f.read() == g.read(), name


def test_report_detects_tampered_payload(minimal_run):
    path = _payload(minimal_run, "ids_exhaustion.csv")
    with open(path, "a") as f:
        f.write("0,1,20,1\n")

    with pytest.raises(IntegrityError):
        render_report(minimal_run.manifest_path)


def test_report_detects_missing_payload(minimal_run):
    os.remove(_payload(minimal_run, "convergence.json"))

    with pytest.raises(IntegrityError):
        render_report(minimal_run.manifest_path)


def test_report_of_empty_manifest(tmp_path):
    manifest = Manifest(
        config_hash="0" * 64, kind="laplace", version=__version__, parallelism=1, seeds=[0], config={}, passed=True
    )
    path, _ = save_artifact(MANIFEST_FILE, json_bytes(manifest.model_dump(mode="json")), base_dir=str(tmp_path))

    assert render_report(path) == HEADER + "\n"


def test_selftest_passes():
    results = run_selftest()

    assert results
    assert [r.name for r in results if not r.passed] == []


def _exit_code(argv):
    with pytest.raises(SystemExit) as exc_info:
        main(argv)
    return exc_info.value.code


def test_cli_exit_codes(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps(MINIMAL))
    out = str(tmp_path / "runs")

    assert _exit_code(["run", str(config), "--output-dir", out]) == EXIT_OK
    assert _exit_code(["run", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert _exit_code(["report", str(tmp_path / "missing" / MANIFEST_FILE)]) == EXIT_INTEGRITY
    assert _exit_code([]) == EXIT_USAGE

    capsys.readouterr()
    assert _exit_code(["version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


def test_cli_resource_limit(tmp_path):
    config = tmp_path / "nftb.json"
    config.write_text(json.dumps({**MINIMAL, "kind": "nftb", "dense_ceiling": 4}))

    assert _exit_code(["run", str(config), "--output-dir", str(tmp_path / "runs")]) == EXIT_RESOURCE
