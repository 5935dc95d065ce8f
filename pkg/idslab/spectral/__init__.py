from .engine import (
    count_below,
    eigendecompose,
    heat_operator,
    heat_trace_hilbert_schmidt,
    inertia_report,
    lowest_eigenvalue,
    region_weights,
    restricted_trace,
)
from .inertia import DEFAULT_DENSE_CEILING, inertia

__all__ = [
    "DEFAULT_DENSE_CEILING",
    "count_below",
    "eigendecompose",
    "heat_operator",
    "heat_trace_hilbert_schmidt",
    "inertia",
    "inertia_report",
    "lowest_eigenvalue",
    "region_weights",
    "restricted_trace",
]
