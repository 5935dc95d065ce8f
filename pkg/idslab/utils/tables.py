import csv
import io
import json
from fractions import Fraction
from typing import Any, Iterable, List, Sequence, Tuple

import numpy as np

FLOAT_FORMAT = ".17g"


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    if isinstance(value, Fraction):
        return str(value)
    return str(value)


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> bytes:
    """
    Render ``rows`` as CSV with a single header row.

    Floats are written with 17 significant digits so they read back exactly.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} columns, header has {len(header)}")
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue().encode()


def read_csv(path: str) -> Tuple[List[str], List[List[str]]]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows:
        return [], []
    return rows[0], rows[1:]


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, bytes):
        return value.decode()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def to_jsonable(payload: Any) -> Any:
    """Round-trip ``payload`` through JSON so numpy scalars and arrays become plain values."""
    return json.loads(json.dumps(payload, default=_json_default))


def json_bytes(payload: Any) -> bytes:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return (json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n").encode()
