import math
from enum import Enum
from typing import Optional, Self, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator

from idslab.models.geometry import CellWindow


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    PERIODIC_SUPERCELL = "periodic-supercell"


class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    window: CellWindow
    config_hash: str
    shift: Tuple[int, ...]


class DiscreteHamiltonian(BaseModel):
    """Symmetrized Schroedinger operator H^ = M^{1/2} H M^{-1/2} on a finite vertex set.

    ``matrix`` holds both triangles with identical values. The edge list keeps the
    ingredients of the quadratic form (edge conductances, conductance of edges to
    deleted Dirichlet vertices, potential) so the unsymmetrized pair (K, M) can be
    rebuilt without touching ``matrix``.

    Attributes:
        vertices (np.ndarray): ``(n, d)`` absolute mesh coordinates, C order of the box.
        vertex_lo (tuple[int, ...]): Smallest vertex coordinate of the box.
        vertex_shape (tuple[int, ...]): Vertices per axis.
        matrix (scipy.sparse.csr_matrix): The symmetric operator.
        mu (np.ndarray): Vertex measure.
        potential (np.ndarray): V at the vertices.
        edges (np.ndarray): ``(E, 2)`` vertex index pairs, ``i < j``.
        edge_weights (np.ndarray): Conductance per edge (duplicates on small tori summed).
        boundary_weights (np.ndarray): Per vertex, total conductance to deleted vertices.
        boundary (BoundaryCondition): Dirichlet or periodic supercell.
        period (int | None): Torus period in cells for supercells.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vertices: np.ndarray
    vertex_lo: Tuple[int, ...]
    vertex_shape: Tuple[int, ...]
    resolution: int = Field(ge=1)
    matrix: sp.csr_matrix
    mu: np.ndarray
    potential: np.ndarray
    edges: np.ndarray
    edge_weights: np.ndarray
    boundary_weights: np.ndarray
    boundary: BoundaryCondition
    period: Optional[int] = None
    provenance: Optional[Provenance] = None

    @model_validator(mode="after")
    def validate_operator(self) -> Self:
        n = self.vertices.shape[0]
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {n} vertices")
        if self.mu.shape != (n,) or self.potential.shape != (n,):
            raise ValueError("mu and potential must have one entry per vertex")
        if (self.matrix != self.matrix.T).nnz != 0:
            raise ValueError("the assembled operator is not exactly symmetric")
        return self

    @property
    def dimension(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def volume(self) -> float:
        """vol_omega(D) = sum of mu, summed exactly then rounded once."""
        return math.fsum(self.mu.tolist())

    @property
    def mesh_width(self) -> float:
        return 1.0 / self.resolution

    def norm(self) -> float:
        """Gershgorin bound max_x sum_y |H^_xy|, an upper bound on the spectral norm."""
        if self.dimension == 0:
            return 0.0
        return float(np.abs(self.matrix).sum(axis=1).max())

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def index_of(self, coordinates: np.ndarray) -> np.ndarray:
        """Row indices of the given absolute vertex coordinates."""
        local = np.atleast_2d(np.asarray(coordinates, dtype=np.int64)) - np.asarray(self.vertex_lo)
        shape = np.asarray(self.vertex_shape)
        if self.boundary == BoundaryCondition.PERIODIC_SUPERCELL:
            local = np.mod(local, shape)
        elif np.any(local < 0) or np.any(local >= shape):
            raise IndexError("vertex coordinates outside the operator's domain")
        return np.ravel_multi_index(tuple(local.T), self.vertex_shape)

    def stiffness(self) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
        """The unsymmetrized pair (K, M) with H = M^{-1} K, rebuilt from the form data."""
        n = self.dimension
        i, j = self.edges[:, 0], self.edges[:, 1]
        w = self.edge_weights
        degree = np.zeros(n)
        np.add.at(degree, i, w)
        np.add.at(degree, j, w)
        diagonal = degree + self.boundary_weights + self.potential * self.mu
        rows = np.concatenate([i, j, np.arange(n)])
        cols = np.concatenate([j, i, np.arange(n)])
        data = np.concatenate([-w, -w, diagonal])
        k = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
        return k, sp.diags(self.mu).tocsr()

    def shifted(self, c: float) -> "DiscreteHamiltonian":
        """H + cI: the same operator with the potential raised by the constant ``c``."""
        identity = sp.identity(self.dimension, format="csr")
        return self.model_copy(
            update={
                "matrix": (self.matrix + c * identity).tocsr(),
                "potential": self.potential + c,
            }
        )


class FormReport(BaseModel):
    """Comparability of the disordered and flat quadratic forms on test vectors.

    Attributes:
        c_a (float): Constant with C_A^{-1} (Q_0 + |f|^2) <= Q_omega + |f|^2 <= C_A (Q_0 + |f|^2).
        ratio_min (float): Smallest observed (Q_omega + |f|^2) / (Q_0 + |f|^2).
        ratio_max (float): Largest observed ratio.
        trials (int): Number of test vectors.
        passed (bool): Every ratio within [1/C_A, C_A].
    """

    c_a: float = Field(ge=1.0)
    ratio_min: float
    ratio_max: float
    trials: int
    passed: bool


class EquivarianceReport(BaseModel):
    gamma: Tuple[int, ...]
    seed: int
    mismatched_entries: int
    sampled_shift_mismatches: int = 0
    passed: bool
