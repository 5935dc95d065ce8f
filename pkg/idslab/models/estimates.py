from enum import Enum
from typing import Dict, List, Literal, Optional, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class EstimateProvenance(str, Enum):
    DIRICHLET_EXHAUSTION = "dirichlet-exhaustion"
    FREE_RESTRICTION = "free-restriction"
    ABSTRACT_QUOTIENT = "abstract-quotient"


class IDSEstimate(BaseModel):
    """A table of N(lambda) (or of the heat quotient in t) with its provenance.

    Attributes:
        variable (str): ``energy`` for distribution functions, ``time`` for heat quotients.
        grid (np.ndarray): Energies or times.
        values (np.ndarray): Estimated values on the grid.
        provenance (EstimateProvenance): Which estimator produced the table.
        standard_error (np.ndarray | None): Monte Carlo error when averaged over seeds.
        counts (np.ndarray | None): Integer eigenvalue counts (single-seed Dirichlet).
        volume (float | None): vol_omega(D) (or the mean vol(F) for quotients).
        radius (int | None): Box radius of D_j.
        seeds (list[int]): Seeds that entered the estimate.
        config_hash (str): Digest of the model configuration.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variable: Literal["energy", "time"] = "energy"
    grid: np.ndarray
    values: np.ndarray
    provenance: EstimateProvenance
    standard_error: Optional[np.ndarray] = None
    counts: Optional[np.ndarray] = None
    volume: Optional[float] = None
    radius: Optional[int] = None
    seeds: List[int] = Field(default_factory=list)
    config_hash: str = ""

    @model_validator(mode="after")
    def validate_table(self) -> Self:
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if self.variable == "energy" and np.any(np.diff(self.values) < 0):
            raise ValueError("a distribution function must be non-decreasing in the energy")
        return self


class LaplaceTable(BaseModel):
    """L_j(t) = tr(e^{-t H^j}) / vol(D_j) with the uniform bound C(t) = C^_t C_g^d.

    ``flat_bound`` is C^_t, the on-diagonal free lattice kernel. The bound is
    rigorous for the flat metric only; ``bound_holds`` records the comparison.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    values: np.ndarray
    flat_bound: np.ndarray
    bound: np.ndarray
    bound_holds: bool
    volume: float
    radius: int
    seed: int


class ConvergenceReport(BaseModel):
    """Exhaustion along an admissible sequence for a set of seeds.

    Per-j lists are indexed like ``radii``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    radii: List[int]
    seeds: List[int]
    energies: np.ndarray
    times: np.ndarray
    mean_curves: np.ndarray
    cauchy_differences: Dict[int, List[float]]
    std_median: List[float]
    std_max: List[float]
    flat_points: np.ndarray
    abstract: IDSEstimate
    abstract_distance: float
    free_gaps: Optional[List[float]] = None
    laplace_means: np.ndarray
    laplace_abstract: IDSEstimate
    laplace_z_scores: np.ndarray
    lowest_eigenvalue: float
    support_inf: float
    support_consistent: bool
    edge_means: List[float]
    edge_stds: List[float]
    estimates: List[IDSEstimate] = Field(default_factory=list)

    @property
    def self_averaging(self) -> bool:
        return all(b < a for a, b in zip(self.std_median, self.std_median[1:]))


class ErgodicRow(BaseModel):
    radius: int
    cardinality: int
    average: float
    expectation: float
    deviation: float
    envelope: float
    within: bool


class ErgodicTable(BaseModel):
    observable: str
    seed: int
    rows: List[ErgodicRow]

    @property
    def passed(self) -> bool:
        return all(r.within for r in self.rows)


class ShiftIdentityReport(BaseModel):
    shift: float
    grid_points: int
    mismatches: int
    volume_unchanged: bool
    passed: bool


class EdgeStatistics(BaseModel):
    """Lowest Dirichlet eigenvalue across seeds, per box of the sequence."""

    radii: List[int]
    means: List[float]
    stds: List[float]
    minima: List[float]


class TraceGapFit(BaseModel):
    """Trace gaps at one heat time against the boundary-layer ratio at thickness h(t).

    ``kappa`` is the least constant with mean gap <= kappa * ratio on every box but
    the last (on the only box when there is one). The last box is controlled when its
    mean gap stays within ``(1 + slack) * kappa * ratio``.

    Attributes:
        gaps (list[list[float]]): Per seed, per box trace gaps.
    """

    time: float
    thickness: float
    margin: int
    radii: List[int]
    ratios: List[float]
    gaps: List[List[float]]
    mean_gaps: List[float]
    kappa: float
    slack: float

    @property
    def controlled(self) -> bool:
        return self.mean_gaps[-1] <= (1.0 + self.slack) * self.kappa * self.ratios[-1]

    @property
    def shrinking(self) -> bool:
        return all(b <= a for a, b in zip(self.mean_gaps, self.mean_gaps[1:]))
