from .counter_hash import derive_key, hash_uniform, splitmix64
from .sampling import (
    cell_amplitudes,
    cell_potentials,
    sample_metric,
    sample_potential,
    shift_realization,
    verify_model_bounds,
    write_field_columns,
)

__all__ = [
    "cell_amplitudes",
    "cell_potentials",
    "derive_key",
    "hash_uniform",
    "sample_metric",
    "sample_potential",
    "shift_realization",
    "splitmix64",
    "verify_model_bounds",
    "write_field_columns",
]
