import hashlib
import json
import math
from enum import Enum
from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field


class BumpProfile(str, Enum):
    """Smoothing kernel b that spreads each cell amplitude over the mesh.

    ``bspline``: tensor product of centered cubic B-splines, C^2, support radius
    2 cells around the cell center. The integer translates form a partition of
    unity, so the overlap sum S_b = sup_x sum_g b(x - g) equals 1, and the
    one-step variation sum over translates is at most G_b = 5/2 per unit step.

    ``indicator``: indicator of the unit cell [0, 1)^d. S_b = 1; the field is
    piecewise constant and jumps by at most 2A across a cell face.
    """

    BSPLINE = "bspline"
    INDICATOR = "indicator"


BUMP_OVERLAP_SUP: Dict[BumpProfile, float] = {
    BumpProfile.BSPLINE: 1.0,
    BumpProfile.INDICATOR: 1.0,
}

BUMP_VARIATION_SUP: Dict[BumpProfile, float] = {
    BumpProfile.BSPLINE: 2.5,
}


def canonical_digest(payload: Any) -> str:
    """SHA-256 of the canonical JSON of ``payload`` (sorted keys, compact separators)."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ModelConfig(BaseModel):
    """Parameters of the random conformal metric and random potential.

    Attributes:
        dimension (int): Lattice dimension d.
        resolution (int): Mesh vertices per fundamental-cell edge m; mesh width h = 1/m.
        metric_amplitude (float): Log-density amplitude A; a_g ~ U[-A, A].
        potential_amplitude (float): Potential amplitude Q; q_g ~ U[0, Q].
        bump (BumpProfile): Smoothing kernel shared by metric and potential.
        seed (int): Master seed; experiment seed lists are derived from it.
        max_extent (int): Largest admissible |cell coordinate| of any sampled window.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    dimension: int = Field(default=2, ge=1)
    resolution: int = Field(default=2, ge=1)
    metric_amplitude: float = Field(default=0.3, ge=0.0, allow_inf_nan=False)
    potential_amplitude: float = Field(default=1.0, ge=0.0, allow_inf_nan=False)
    bump: BumpProfile = BumpProfile.BSPLINE
    seed: int = Field(default=0, ge=-(2**63), lt=2**64)
    max_extent: int = Field(default=4096, ge=1)

    @property
    def mesh_width(self) -> float:
        return 1.0 / self.resolution

    @property
    def overlap_sup(self) -> float:
        return BUMP_OVERLAP_SUP[self.bump]

    @property
    def c_g(self) -> float:
        """Metric comparability constant C_g = exp(2 A S_b) >= 1."""
        return math.exp(2.0 * self.metric_amplitude * self.overlap_sup)

    @property
    def c_rho(self) -> float:
        """Bound on the discrete gradient |rho(x) - rho(y)| / h along mesh edges."""
        d = self.dimension
        a = self.metric_amplitude
        density_lipschitz = d * math.exp(d * a * self.overlap_sup)
        if self.bump == BumpProfile.INDICATOR:
            return density_lipschitz * 2.0 * a * self.resolution
        return density_lipschitz * a * BUMP_VARIATION_SUP[self.bump]

    @property
    def is_flat(self) -> bool:
        return self.metric_amplitude == 0.0

    def digest(self) -> str:
        return canonical_digest(self.model_dump(mode="json"))
