from .assembly import (
    assemble_dirichlet,
    assemble_supercell,
    build_dirichlet,
    build_supercell,
    write_coordinate_matrix,
)
from .checks import comparability_constant, equivariance_check, form_comparability

__all__ = [
    "assemble_dirichlet",
    "assemble_supercell",
    "build_dirichlet",
    "build_supercell",
    "comparability_constant",
    "equivariance_check",
    "form_comparability",
    "write_coordinate_matrix",
]
