from .folner import (
    boundary_layers,
    folner_defect,
    isoperimetric_bound,
    isoperimetric_ratio,
    make_admissible_sequence,
    sumset_size,
    tempered_union_ratio,
    thicken,
)

__all__ = [
    "boundary_layers",
    "folner_defect",
    "isoperimetric_bound",
    "isoperimetric_ratio",
    "make_admissible_sequence",
    "sumset_size",
    "tempered_union_ratio",
    "thicken",
]
