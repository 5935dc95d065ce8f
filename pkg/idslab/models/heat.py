from typing import List, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from idslab.models.hamiltonian import BoundaryCondition, DiscreteHamiltonian


class KernelMatrix(BaseModel):
    """mu-weighted heat kernel K(t, x, y) = (e^{-t H^})_xy / sqrt(mu(x) mu(y)).

    Attributes:
        time (float): t.
        hamiltonian (DiscreteHamiltonian): Operator the kernel belongs to.
        entries (np.ndarray): Symmetric, entrywise nonnegative after clamping.
        sup_entry (float): max_{x,y} K, the empirical C_t.
        row_integral_sup (float): max_x sum_y K(t, x, y) mu(y), the empirical B_t.
        worst_negative (float): Most negative semigroup entry before clamping.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    time: float = Field(ge=0)
    hamiltonian: DiscreteHamiltonian
    entries: np.ndarray
    sup_entry: float
    row_integral_sup: float
    worst_negative: float

    @property
    def boundary(self) -> BoundaryCondition:
        return self.hamiltonian.boundary

    @property
    def mu(self) -> np.ndarray:
        return self.hamiltonian.mu


class MonotonicityReport(BaseModel):
    """Entrywise comparison K_small <= K_large + tolerance on the shared vertices.

    ``max_excess`` is max(K_small - K_large) (<= tolerance on pass) and
    ``max_gap`` the largest amount by which K_large exceeds K_small.
    """

    time: float
    compared_entries: int
    max_excess: float
    max_gap: float
    tolerance: float
    passed: bool


class NftbRow(BaseModel):
    thickness: float
    layers: int
    core_size: int
    sup_difference: float
    min_difference: float
    empty_core: bool


class NftbReport(BaseModel):
    """Core kernel gap between the ambient proxy for X and the Dirichlet box."""

    time: float
    radius: int
    margin: int
    rows: List[NftbRow]

    @property
    def non_increasing(self) -> bool:
        sups = [r.sup_difference for r in self.rows]
        return all(b <= a for a, b in zip(sups, sups[1:]))

    @property
    def strictly_decreasing(self) -> bool:
        sups = [r.sup_difference for r in self.rows]
        return all(b < a for a, b in zip(sups, sups[1:]))


class MarginReport(BaseModel):
    margin: int
    doubled_margin: int
    max_change: float
    tolerance: float
    passed: bool


class DecayFit(BaseModel):
    """Upper Gaussian envelope log K <= log C_t - alpha_t d_omega^2.

    Attributes:
        time (float): t.
        c_hat (float): Fitted C_t > 0.
        alpha_hat (float): Fitted alpha_t >= 0.
        points (int): Kernel entries used (entries above 1e-12 of the maximum).
        mean_gap (float): Mean of envelope minus log K over the used entries.
        min_gap (float): Smallest envelope minus log K (>= 0 up to solver tolerance).
        passed (bool): alpha_hat > 0 and every entry is below the envelope.
    """

    time: float
    c_hat: float = Field(gt=0)
    alpha_hat: float = Field(ge=0)
    points: int
    mean_gap: float
    min_gap: float
    passed: bool

    @model_validator(mode="after")
    def validate_finite(self) -> Self:
        if not (np.isfinite(self.c_hat) and np.isfinite(self.alpha_hat)):
            raise ValueError("fitted constants must be finite")
        return self
