from typing import Optional, Self, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from idslab.models.config import ModelConfig
from idslab.models.geometry import CellWindow


class _SampledField(BaseModel):
    """Common provenance of a field sampled on a window of cells.

    Vertex arrays have the window's vertex shape. ``shift`` is the cumulative
    group element g such that the field describes the realization T_g(omega).
    ``period`` marks a periodic realization on the torus of ``period`` cells.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    config: ModelConfig
    seed: int
    window: CellWindow
    shift: Tuple[int, ...]
    period: Optional[int] = None

    @property
    def resolution(self) -> int:
        return self.config.resolution

    @property
    def vertex_shape(self) -> Tuple[int, ...]:
        return self.window.vertex_shape(self.config.resolution)

    def local_index(self, coordinates: np.ndarray) -> Tuple[np.ndarray, ...]:
        """Array index tuple for absolute vertex coordinates (rows of ``coordinates``)."""
        local = np.asarray(coordinates, dtype=np.int64) - self.window.vertex_lo(self.resolution)
        shape = np.asarray(self.vertex_shape)
        if self.period is not None:
            local = np.mod(local, shape)
        elif np.any(local < 0) or np.any(local >= shape):
            raise IndexError("vertex coordinates outside the sampled window")
        return tuple(local[:, i] for i in range(local.shape[1]))


class MetricField(_SampledField):
    """Random conformal metric g = e^{2 phi} g_0 discretized on the mesh.

    Attributes:
        phi (np.ndarray): Log-density at the vertices.
        rho (np.ndarray): Density e^{-d phi} (dvol_0 / dvol_omega).
        mu (np.ndarray): Vertex measure h^d e^{d phi}.
        edge_phi (tuple[np.ndarray, ...]): Log-density at the midpoint of the forward
            edge (k, k + e_i), stored at k, one array per axis.
        conductance (tuple[np.ndarray, ...]): Edge weights h^{d-2} e^{(d-2) phi(mid)}.
        amplitudes (np.ndarray): Cell amplitudes a_g of the window's cells.
    """

    phi: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    edge_phi: Tuple[np.ndarray, ...]
    conductance: Tuple[np.ndarray, ...]
    amplitudes: np.ndarray

    @model_validator(mode="after")
    def validate_shapes(self) -> Self:
        shape = self.vertex_shape
        arrays = [self.phi, self.rho, self.mu, *self.edge_phi, *self.conductance]
        if any(a.shape != shape for a in arrays):
            raise ValueError(f"field arrays must have the vertex shape {shape}")
        if len(self.conductance) != self.window.dimension:
            raise ValueError("one conductance array per axis is required")
        return self


class PotentialField(_SampledField):
    """Nonnegative random potential V on the mesh vertices.

    Attributes:
        values (np.ndarray): V at the vertices, energy units.
        amplitudes (np.ndarray): Cell amplitudes q_g of the window's cells.
    """

    values: np.ndarray
    amplitudes: np.ndarray

    @model_validator(mode="after")
    def validate_shape(self) -> Self:
        if self.values.shape != self.vertex_shape:
            raise ValueError(f"potential must have the vertex shape {self.vertex_shape}")
        return self


class ModelBoundsReport(BaseModel):
    """Observed extrema of a metric field against the derived constants."""

    c_g_observed: float
    c_rho_observed: float
    c_g: float
    c_rho: float
    density_min: float
    density_max: float
    passed: bool
