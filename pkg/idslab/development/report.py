import json
import os
from typing import Any, Dict, List, Sequence

import numpy as np

from idslab.exceptions import IntegrityError
from idslab.models.experiment import Manifest
from idslab.utils.save_artifact import file_digest
from idslab.utils.tables import read_csv

QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)
HEADER = "# ids-lab report"


def load_manifest(path: str) -> Manifest:
    if not os.path.isfile(path):
        raise IntegrityError(f"manifest not found: {path}")
    with open(path, "r") as f:
        try:
            return Manifest.model_validate(json.load(f))
        except (json.JSONDecodeError, ValueError) as e:
            raise IntegrityError(f"manifest {path} is unreadable: {e}") from e


def verify_payloads(manifest: Manifest, run_dir: str) -> None:
    """Every payload named in the manifest must exist and match its recorded digest."""
    for record in manifest.records:
        for entry in record.payloads:
            path = os.path.join(run_dir, entry.path)
            if not os.path.isfile(path):
                raise IntegrityError(f"payload {entry.path} of {record.kind} is missing")
            digest = file_digest(path)
            if digest != entry.sha256:
                raise IntegrityError(
                    f"payload {entry.path} of {record.kind} does not match its digest "
                    f"({digest[:12]} != {entry.sha256[:12]})"
                )


def _table(header: Sequence[str], rows: List[Sequence[str]]) -> List[str]:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.extend("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows)
    return lines


def _fmt(value: float) -> str:
    return format(value, ".6g")


def _exhaustion_rows(path: str) -> List[List[str]]:
    """Mean and spread across seeds of N^j at the energy-grid quantiles, per radius."""
    header, raw = read_csv(path)
    if not raw:
        return []
    columns = {name: i for i, name in enumerate(header)}
    data = np.array([[float(r[columns[c]]) for c in ("seed", "radius", "energy", "N")] for r in raw])
    rows = []
    radii = sorted(set(data[:, 1].astype(int)))
    energies = np.unique(data[:, 2])
    for j, radius in enumerate(radii):
        block = data[data[:, 1] == radius]
        for q in QUANTILES:
            energy = energies[min(int(q * (energies.size - 1) + 0.5), energies.size - 1)]
            values = block[block[:, 2] == energy][:, 3]
            spread = float(values.std(ddof=1)) if values.size > 1 else 0.0
            rows.append(
                [str(j), str(radius), _fmt(q), _fmt(energy), _fmt(float(values.mean())), _fmt(spread), str(values.size)]
            )
    return rows


def _metric_value(value: Any) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return _fmt(value)
    if isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return " ".join(_fmt(float(v)) for v in value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def _metric_rows(manifest: Manifest) -> List[List[str]]:
    return [
        [record.kind, name, _metric_value(record.metrics[name])]
        for record in manifest.records
        for name in sorted(record.metrics)
    ]


def _convergence_rows(path: str) -> List[List[str]]:
    """Cauchy difference (max over seeds), cross-seed spread and free gap per j."""
    with open(path, "r") as f:
        summary = json.load(f)
    radii = [row["radius"] for row in summary["sequence"]]
    cauchy = list(summary["cauchy_differences"].values())
    free = summary.get("free_gaps")
    rows = []
    for j, radius in enumerate(radii):
        step = max((seed[j - 1] for seed in cauchy), default=0.0) if j > 0 else None
        rows.append(
            [
                str(j),
                str(radius),
                "-" if step is None else _fmt(step),
                _fmt(summary["std_median"][j]),
                _fmt(summary["std_max"][j]),
                "-" if free is None else _fmt(free[j]),
            ]
        )
    return rows


def _grouped(path: str, keys: Sequence[str], values: Sequence[str]) -> Dict[tuple, np.ndarray]:
    header, raw = read_csv(path)
    columns = {name: i for i, name in enumerate(header)}
    groups: Dict[tuple, list] = {}
    for r in raw:
        key = tuple(float(r[columns[k]]) for k in keys)
        groups.setdefault(key, []).append([float(r[columns[v]]) for v in values])
    return {key: np.array(rows) for key, rows in sorted(groups.items())}


def _free_rows(path: str) -> List[List[str]]:
    """Sup over the energy grid of |mean N_dirichlet - mean N_free| across seeds, per radius."""
    sup: Dict[int, float] = {}
    for (radius, _), block in _grouped(path, ("radius", "energy"), ("N_dirichlet", "N_free")).items():
        dirichlet, free = block.mean(axis=0)
        sup[int(radius)] = max(sup.get(int(radius), 0.0), abs(float(dirichlet - free)))
    return [[str(radius), _fmt(gap)] for radius, gap in sorted(sup.items())]


def _trace_gap_rows(path: str) -> List[List[str]]:
    rows = []
    for (t, radius), block in _grouped(
        path, ("time", "radius"), ("thickness", "boundary_ratio", "gap", "kappa")
    ).items():
        rows.append(
            [
                _fmt(t),
                str(int(radius)),
                _fmt(block[0, 0]),
                _fmt(block[0, 1]),
                _fmt(float(block[:, 2].mean())),
                _fmt(float(block[:, 2].max())),
                _fmt(block[0, 3]),
            ]
        )
    return rows


def _nftb_rows(path: str) -> List[List[str]]:
    rows = []
    for (thickness,), block in _grouped(
        path, ("thickness",), ("layers", "core_size", "sup_difference")
    ).items():
        rows.append(
            [
                _fmt(thickness),
                str(int(block[0, 0])),
                str(int(block[0, 1])),
                _fmt(float(block[:, 2].mean())),
                _fmt(float(block[:, 2].max())),
                str(block.shape[0]),
            ]
        )
    return rows


SECTIONS = (
    (
        "ids_exhaustion.csv",
        "# counting functions N^j at energy-grid quantiles",
        ["j", "radius", "quantile", "energy", "mean_N", "std_N", "seeds"],
        _exhaustion_rows,
    ),
    (
        "convergence.json",
        "# exhaustion along j: Cauchy step, cross-seed spread, Dirichlet vs free",
        ["j", "radius", "max_cauchy", "std_median", "std_max", "free_gap"],
        _convergence_rows,
    ),
    (
        "ids_free.csv",
        "# Dirichlet vs free counting functions",
        ["radius", "sup_gap"],
        _free_rows,
    ),
    (
        "trace_gap.csv",
        "# trace gaps against the boundary-layer ratio at thickness h(t)",
        ["time", "radius", "thickness", "ratio", "mean_gap", "max_gap", "kappa"],
        _trace_gap_rows,
    ),
    (
        "nftb.csv",
        "# not feeling the boundary: core kernel gap per thickness",
        ["thickness", "layers", "core_size", "mean_sup", "max_sup", "seeds"],
        _nftb_rows,
    ),
)


def render_report(manifest_path: str) -> str:
    """
    Plain-text report of a run directory, one whitespace-aligned table per section.

    Payload digests are verified first; an empty manifest renders the header only.
    """
    manifest = load_manifest(manifest_path)
    run_dir = os.path.dirname(os.path.abspath(manifest_path))
    verify_payloads(manifest, run_dir)

    lines = [HEADER]
    if not manifest.records:
        return "\n".join(lines) + "\n"

    lines.append(f"# config {manifest.config_hash[:12]} kind={manifest.kind} version={manifest.version}")
    lines.append(f"# seeds {' '.join(str(s) for s in manifest.seeds)}")
    lines.append("")
    lines.extend(
        _table(
            ["experiment", "passed", "failed_checks"],
            [
                [
                    r.kind,
                    "yes" if r.passed else "no",
                    ",".join(k for k, ok in r.checks.items() if not ok) or ("error" if r.error else "-"),
                ]
                for r in manifest.records
            ],
        )
    )

    payloads: Dict[str, str] = {
        entry.name: os.path.join(run_dir, entry.path) for r in manifest.records for entry in r.payloads
    }
    for name, title, header, rows_of in SECTIONS:
        if name in payloads:
            lines.append("")
            lines.append(title)
            lines.extend(_table(header, rows_of(payloads[name])))

    metrics = _metric_rows(manifest)
    if metrics:
        lines.append("")
        lines.append("# metrics (recorded, not gating)")
        lines.extend(_table(["experiment", "metric", "value"], metrics))

    for record in manifest.records:
        if record.error is not None:
            lines.append("")
            lines.append(f"# {record.kind} failed: {record.error.type}: {record.error.message}")
    return "\n".join(lines) + "\n"
