from fractions import Fraction
from typing import List, Optional, Self, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


def _grid_points(lo: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """All integer points of the box ``lo + [0, shape)`` as rows, in C order."""
    axes = [np.arange(n, dtype=np.int64) for n in shape]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1) + lo


class CellWindow(BaseModel):
    """Box of fundamental cells ``[lo, hi]`` (inclusive) in Z^d.

    A window owns the mesh vertices k with ``lo_i * m <= k_i <= (hi_i + 1) * m - 1``;
    vertex arrays attached to a window use C order with axis i for coordinate i.
    """

    model_config = ConfigDict(frozen=True)

    lo: Tuple[int, ...]
    hi: Tuple[int, ...]

    @model_validator(mode="after")
    def validate_bounds(self) -> Self:
        if len(self.lo) == 0 or len(self.lo) != len(self.hi):
            raise ValueError("window bounds must be nonempty and of equal length")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"empty window: lo={self.lo} hi={self.hi}")
        return self

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def cell_shape(self) -> Tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.cell_shape))

    def vertex_lo(self, resolution: int) -> np.ndarray:
        return np.asarray(self.lo, dtype=np.int64) * resolution

    def vertex_shape(self, resolution: int) -> Tuple[int, ...]:
        return tuple(n * resolution for n in self.cell_shape)

    def cells(self) -> np.ndarray:
        return _grid_points(np.asarray(self.lo, dtype=np.int64), self.cell_shape)

    def vertex_coordinates(self, resolution: int) -> np.ndarray:
        return _grid_points(self.vertex_lo(resolution), self.vertex_shape(resolution))

    def translated(self, gamma: Tuple[int, ...]) -> "CellWindow":
        return CellWindow(
            lo=tuple(a + g for a, g in zip(self.lo, gamma)),
            hi=tuple(b + g for b, g in zip(self.hi, gamma)),
        )

    def enlarged(self, layers: int) -> "CellWindow":
        return CellWindow(
            lo=tuple(a - layers for a in self.lo),
            hi=tuple(b + layers for b in self.hi),
        )

    def contains(self, other: "CellWindow") -> bool:
        return all(a <= c for a, c in zip(self.lo, other.lo)) and all(
            b >= d for b, d in zip(self.hi, other.hi)
        )

    def max_abs_coordinate(self) -> int:
        return max(max(abs(a) for a in self.lo), max(abs(b) for b in self.hi))


class FolnerBox(BaseModel):
    """Index set I_L = center + [-L, L]^d and its lattice domain D_L = phi(I_L)."""

    model_config = ConfigDict(frozen=True)

    dimension: int = Field(ge=1)
    radius: int = Field(ge=0)
    resolution: int = Field(default=1, ge=1)
    center: Optional[Tuple[int, ...]] = None

    @model_validator(mode="after")
    def validate_center(self) -> Self:
        if self.center is None:
            object.__setattr__(self, "center", (0,) * self.dimension)
        elif len(self.center) != self.dimension:
            raise ValueError("center must have one coordinate per dimension")
        return self

    @property
    def window(self) -> CellWindow:
        c = self.center or (0,) * self.dimension
        return CellWindow(
            lo=tuple(x - self.radius for x in c), hi=tuple(x + self.radius for x in c)
        )

    @property
    def cardinality(self) -> int:
        return (2 * self.radius + 1) ** self.dimension

    @property
    def vertex_count(self) -> int:
        return self.cardinality * self.resolution**self.dimension

    @property
    def mesh_width(self) -> float:
        return 1.0 / self.resolution

    def index_set(self) -> np.ndarray:
        return self.window.cells()

    def vertex_coordinates(self) -> np.ndarray:
        return self.window.vertex_coordinates(self.resolution)

    def vertex_shape(self) -> Tuple[int, ...]:
        return self.window.vertex_shape(self.resolution)

    def enlarged(self, margin: int) -> "FolnerBox":
        return self.model_copy(update={"radius": self.radius + margin})

    def translated(self, gamma: Tuple[int, ...]) -> "FolnerBox":
        c = self.center or (0,) * self.dimension
        return self.model_copy(update={"center": tuple(a + g for a, g in zip(c, gamma))})

    def contains(self, other: "FolnerBox") -> bool:
        return self.resolution == other.resolution and self.window.contains(other.window)


class AdmissibleSequence(BaseModel):
    """Increasing boxes D^j = phi(I_j) with their enumerated temperedness data.

    ``sumset_sizes[j]`` is |I_{j+1} I_j^{-1}| and ``union_sumset_sizes[j]`` is
    |U_{k<=j} I_k^{-1} I_{j+1}|, both counted exactly.
    """

    model_config = ConfigDict(frozen=True)

    boxes: List[FolnerBox]
    sumset_sizes: List[int] = Field(default_factory=list)
    union_sumset_sizes: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_monotone(self) -> Self:
        if not self.boxes:
            raise ValueError("an admissible sequence needs at least one box")
        radii = [b.radius for b in self.boxes]
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError(f"radii must be strictly increasing, got {radii}")
        if len({(b.dimension, b.resolution, b.center) for b in self.boxes}) != 1:
            raise ValueError("boxes must share dimension, resolution and center")
        return self

    @property
    def radii(self) -> List[int]:
        return [b.radius for b in self.boxes]

    @property
    def temperedness_ratios(self) -> List[Fraction]:
        return [
            Fraction(s, self.boxes[j + 1].cardinality)
            for j, s in enumerate(self.sumset_sizes)
        ]

    @property
    def temperedness(self) -> Fraction:
        """sup_j |I_{j+1} I_j^{-1}| / |I_{j+1}|; 0 for a single box (empty supremum)."""
        ratios = self.temperedness_ratios
        return max(ratios) if ratios else Fraction(0)

    @property
    def union_temperedness(self) -> Fraction:
        ratios = [
            Fraction(s, self.boxes[j + 1].cardinality)
            for j, s in enumerate(self.union_sumset_sizes)
        ]
        return max(ratios) if ratios else Fraction(0)


class ThickenedBoundary(BaseModel):
    """Partition of the vertices of D into the boundary layer and the core D_h.

    Masks are boolean arrays of the box's vertex shape.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    box: FolnerBox
    thickness: float = Field(gt=0)
    layers: int = Field(ge=1)
    boundary_mask: np.ndarray
    core_mask: np.ndarray

    @property
    def core_size(self) -> int:
        return int(self.core_mask.sum())

    @property
    def boundary_size(self) -> int:
        return int(self.boundary_mask.sum())

    def core_coordinates(self) -> np.ndarray:
        return self.box.vertex_coordinates()[self.core_mask.ravel()]
