from .experiments import (
    ergodic_average,
    exhaustion_experiment,
    expected_cell_volume,
    flat_points,
    gap_thickness,
    shift_identity_check,
    spectral_edge_statistics,
    trace_gap_control,
)
from .lab import (
    abstract_ids,
    counting_ids,
    default_energy_grid,
    free_ids,
    laplace_transform,
    trace_gap,
    trace_gaps,
)

__all__ = [
    "abstract_ids",
    "counting_ids",
    "default_energy_grid",
    "ergodic_average",
    "exhaustion_experiment",
    "expected_cell_volume",
    "flat_points",
    "free_ids",
    "gap_thickness",
    "laplace_transform",
    "shift_identity_check",
    "spectral_edge_statistics",
    "trace_gap",
    "trace_gap_control",
    "trace_gaps",
]
