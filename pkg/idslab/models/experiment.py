from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from idslab.models.config import ModelConfig, canonical_digest


Observable = Literal["amplitude", "potential", "volume", "heat-trace", "constant"]


class ExperimentKind(str, Enum):
    IDS_EXHAUSTION = "ids-exhaustion"
    IDS_FREE = "ids-free"
    LAPLACE = "laplace"
    ABSTRACT = "abstract"
    NFTB = "nftb"
    DECAY = "decay"
    MONOTONICITY = "monotonicity"
    ERGODIC = "ergodic"
    FULL_SUITE = "full-suite"


class Grids(BaseModel):
    """Evaluation grids. ``energies`` defaults to 200 points on [0, 4 d m^2 + Q]."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    energies: Optional[List[float]] = None
    energy_points: int = Field(default=200, ge=1)
    times: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    thicknesses: List[float] = Field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])

    @model_validator(mode="after")
    def validate_grids(self) -> Self:
        for name in ("energies", "times", "thicknesses"):
            values = getattr(self, name)
            if values is not None and len(values) == 0:
                raise ValueError(f"grid '{name}' must be nonempty")
            if values is not None and any(b < a for a, b in zip(values, values[1:])):
                raise ValueError(f"grid '{name}' must be sorted ascending")
        if any(t < 0 for t in self.times):
            raise ValueError("heat times must be nonnegative")
        if any(h <= 0 for h in self.thicknesses):
            raise ValueError("thicknesses must be positive")
        return self


class Tolerances(BaseModel):
    """Thresholds of the experiment checks; all strictly positive.

    Attributes:
        flatness (float | None): Local flatness threshold of the counting curves;
            the mean grid increment when unset.
        agreement (float): Allowed Dirichlet vs free / exhaustion vs abstract gap
            at flat points, in units of h^{-d}.
        z_score (float): Allowed standardized Laplace-transform discrepancy.
        kernel (float): Entrywise kernel comparison tolerance.
        margin (float): Ambient margin self-consistency tolerance.
        trace_gap (float): Relative excess of the last box over the fitted
            trace-gap constant kappa(t).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    flatness: Optional[float] = Field(default=None, gt=0)
    agreement: float = Field(default=0.05, gt=0)
    z_score: float = Field(default=3.0, gt=0)
    kernel: float = Field(default=1e-12, gt=0)
    margin: float = Field(default=1e-10, gt=0)
    trace_gap: float = Field(default=0.25, gt=0)


class ExperimentConfig(BaseModel):
    """One experiment run, as read from a TOML or JSON file.

    Attributes:
        model (ModelConfig): Disorder model.
        kind (ExperimentKind): Experiment to run; ``full-suite`` runs all of them.
        radii (list[int]): Radii of the admissible sequence.
        seeds (list[int] | None): Explicit seeds; otherwise ``seed_count`` seeds from ``base_seed``.
        base_seed (int | None): First seed; ``model.seed`` when unset.
        seed_count (int): Number of derived seeds.
        grids (Grids): Energy, time and thickness grids.
        tolerances (Tolerances): Check thresholds.
        time (float): Heat time of the kernel experiments.
        margin (int | None): Ambient margin in cells for free/nftb/trace-gap runs; the
            nftb self-consistency margin of the largest thickness when unset.
        supercell_period (int | None): Torus period of the abstract estimator.
        observables (list[str]): Observables of the ergodic experiment.
        output_dir (str): Root of the run directories (not part of the config hash).
        parallelism (int): Worker threads mapped over seeds.
        dense_ceiling (int): Largest dimension handled by dense linear algebra.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelConfig = Field(default_factory=ModelConfig)
    kind: ExperimentKind
    radii: List[int] = Field(default_factory=lambda: [2, 4, 8])
    seeds: Optional[List[int]] = None
    base_seed: Optional[int] = None
    seed_count: int = Field(default=1, ge=1)
    grids: Grids = Field(default_factory=Grids)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    time: float = Field(default=1.0, gt=0)
    margin: Optional[int] = Field(default=None, ge=0)
    supercell_period: Optional[int] = Field(default=None, ge=1)
    observables: List[Observable] = Field(default_factory=lambda: ["amplitude", "potential", "constant"])
    output_dir: str = "data/runs"
    parallelism: int = Field(default=1, ge=1)
    dense_ceiling: int = Field(default=4096, ge=1)

    @model_validator(mode="after")
    def validate_run(self) -> Self:
        if not self.radii:
            raise ValueError("radii must be nonempty")
        if self.radii[0] < 0 or any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be nonnegative and strictly increasing")
        if self.seeds is not None and len(self.seeds) == 0:
            raise ValueError("seed list must be nonempty")
        return self

    def seed_list(self) -> List[int]:
        if self.seeds is not None:
            return list(self.seeds)
        base = self.model.seed if self.base_seed is None else self.base_seed
        return [base + k for k in range(self.seed_count)]

    def energy_grid(self) -> np.ndarray:
        if self.grids.energies is not None:
            return np.asarray(self.grids.energies, dtype=float)
        top = 4 * self.model.dimension * self.model.resolution**2 + self.model.potential_amplitude
        return np.linspace(0.0, top, self.grids.energy_points)

    def canonical(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude={"output_dir"})

    def digest(self) -> str:
        """Config hash: SHA-256 of the canonical JSON without the output directory."""
        return canonical_digest(self.canonical())


class PayloadEntry(BaseModel):
    name: str
    path: str
    sha256: str


class ErrorInfo(BaseModel):
    type: str
    message: str
    traceback: Optional[str] = None


class ExperimentOutcome(BaseModel):
    """What an experiment function hands back to the runner.

    ``checks`` gate the exit status; ``metrics`` are recorded only.
    """

    payloads: Dict[str, bytes] = Field(default_factory=dict)
    checks: Dict[str, bool] = Field(default_factory=dict)
    metrics: Dict[str, Any] = Field(default_factory=dict)


class ResultRecord(BaseModel):
    config_hash: str
    kind: str
    payloads: List[PayloadEntry] = Field(default_factory=list)
    checks: Dict[str, bool] = Field(default_factory=dict)
    metrics: Dict[str, Any] = Field(default_factory=dict)
    passed: bool
    error: Optional[ErrorInfo] = None
    wall_time: float = Field(default=0.0, exclude=True)


class Manifest(BaseModel):
    """Index of a run directory. Wall times live in ``timings.json``."""

    config_hash: str
    kind: str
    version: str
    parallelism: int
    seeds: List[int]
    config: Dict[str, Any]
    records: List[ResultRecord] = Field(default_factory=list)
    passed: bool
