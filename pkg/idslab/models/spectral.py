from typing import Annotated, Literal, Optional, Self, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SpectralSummary(BaseModel):
    """Sorted spectrum of one (omega, D) operator.

    Attributes:
        eigenvalues (np.ndarray): lambda_1 <= lambda_2 <= ... with multiplicity.
        eigenvectors (np.ndarray | None): Orthonormal eigenvectors as columns.
        volume (float): vol_omega(D) = sum of mu.
        max_residual (float): max_k |H^ v_k - lambda_k v_k| (0 when no vectors).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    volume: float = Field(gt=0)
    max_residual: float = 0.0

    @model_validator(mode="after")
    def validate_sorted(self) -> Self:
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        if self.eigenvectors is not None and self.eigenvectors.shape != (
            self.eigenvalues.size,
            self.eigenvalues.size,
        ):
            raise ValueError("eigenvector matrix must be square of the spectrum's size")
        return self

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)

    def count_below(self, energy: float) -> int:
        return int(np.searchsorted(self.eigenvalues, energy, side="left"))

    def counting_function(self, energies: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.eigenvalues, np.asarray(energies, dtype=float), side="left")

    def heat_trace(self, t: float) -> float:
        return float(np.sum(np.exp(-t * self.eigenvalues)))


class Inertia(BaseModel):
    """Sylvester inertia of H^ - lambda I from a symmetric-indefinite factorization.

    ``near_boundary`` is set when the smallest pivot magnitude is within
    ``boundary_tolerance`` of zero, i.e. lambda is likely within 1e-9 |H^| of an
    eigenvalue and the count may be off by the multiplicity of that eigenvalue.
    """

    energy: float
    negative: int = Field(ge=0)
    zero: int = Field(ge=0)
    positive: int = Field(ge=0)
    min_pivot: float
    boundary_tolerance: float
    near_boundary: bool
    method: Literal["dense-ldl", "sparse-lu", "dense-fallback"]


class HeatFunction(BaseModel):
    """f(lambda) = exp(-t lambda)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["heat"] = "heat"
    time: float = Field(ge=0)

    def __call__(self, eigenvalues: np.ndarray) -> np.ndarray:
        return np.exp(-self.time * np.asarray(eigenvalues, dtype=float))


class ProjectionFunction(BaseModel):
    """f(lambda) = 1 if lambda < E else 0 (spectral projection E(lambda))."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["projection"] = "projection"
    energy: float

    def __call__(self, eigenvalues: np.ndarray) -> np.ndarray:
        return (np.asarray(eigenvalues, dtype=float) < self.energy).astype(float)


SpectralFunction = Annotated[Union[HeatFunction, ProjectionFunction], Field(discriminator="kind")]


def heat(t: float) -> HeatFunction:
    return HeatFunction(time=t)


def projection(energy: float) -> ProjectionFunction:
    return ProjectionFunction(energy=energy)


class HeatOperator(BaseModel):
    """Dense e^{-t H^} after symmetrization and clamping of |entries| < 1e-14.

    ``worst_negative`` is the most negative entry before clamping (0 if none).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    time: float = Field(ge=0)
    matrix: np.ndarray
    worst_negative: float
    clamped_entries: int
    method: Literal["identity", "eigh", "expm"]
