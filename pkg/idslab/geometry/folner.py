import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import fftconvolve

from idslab.exceptions import ArgumentError
from idslab.models.geometry import AdmissibleSequence, FolnerBox, ThickenedBoundary

IndexSet = Union[FolnerBox, np.ndarray]


def _points(index_set: IndexSet) -> np.ndarray:
    if isinstance(index_set, FolnerBox):
        return index_set.index_set()
    points = np.atleast_2d(np.asarray(index_set, dtype=np.int64))
    return np.unique(points, axis=0) if points.size else points.reshape(0, 1)


def _occupancy(points: np.ndarray, lo: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    grid = np.zeros(shape)
    grid[tuple((points - lo).T)] = 1.0
    return grid


def sumset_size(left: IndexSet, right: IndexSet) -> int:
    """
    |left right^{-1}| = |{a - b : a in left, b in right}|, enumerated exactly.

    Both sets are painted on their bounding grids and convolved (the second one
    reflected); an entry of the convolution counts the representations of a
    difference, so the sumset is its support.
    """
    a, b = _points(left), _points(right)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return 0
    neg = -b
    lo_a, lo_b = a.min(axis=0), neg.min(axis=0)
    grid_a = _occupancy(a, lo_a, tuple(a.max(axis=0) - lo_a + 1))
    grid_b = _occupancy(neg, lo_b, tuple(neg.max(axis=0) - lo_b + 1))
    return int(np.count_nonzero(fftconvolve(grid_a, grid_b) > 0.5))


def make_admissible_sequence(
    dimension: int,
    radii: Sequence[int],
    resolution: int = 1,
    center: Optional[Tuple[int, ...]] = None,
) -> AdmissibleSequence:
    """
    Boxes I_j = center + [-L_j, L_j]^d with their temperedness enumerated.

    Args:
        dimension (int): d.
        radii (Sequence[int]): Strictly increasing L_j >= 0.
        resolution (int): Mesh resolution m of the domains D_j.
        center (tuple[int, ...]): Common center; the origin by default.

    Returns:
        AdmissibleSequence: The boxes with |I_{j+1} I_j^{-1}| and the union sumsets.
    """
    radii = [int(r) for r in radii]
    if not radii:
        raise ArgumentError("an admissible sequence needs at least one radius")
    if any(r < 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ArgumentError(f"radii must be nonnegative and strictly increasing, got {radii}")
    boxes = [
        FolnerBox(dimension=dimension, radius=r, resolution=resolution, center=center)
        for r in radii
    ]
    sumsets = [sumset_size(boxes[j + 1], boxes[j]) for j in range(len(boxes) - 1)]
    unions = [
        sumset_size(boxes[j + 1], np.vstack([b.index_set() for b in boxes[: j + 1]]))
        for j in range(len(boxes) - 1)
    ]
    return AdmissibleSequence(boxes=boxes, sumset_sizes=sumsets, union_sumset_sizes=unions)


def tempered_union_ratio(index_sets: Sequence[IndexSet]) -> Fraction:
    """sup_j |U_{k<j} I_k^{-1} I_j| / |I_j| for an arbitrary list of index sets."""
    best = Fraction(0)
    points = [_points(s) for s in index_sets]
    for j in range(1, len(points)):
        union = np.unique(np.vstack(points[:j]), axis=0)
        best = max(best, Fraction(sumset_size(points[j], union), points[j].shape[0]))
    return best


def folner_defect(index_set: IndexSet, gamma: Sequence[int]) -> Fraction:
    """|I symmetric-difference I gamma| / |I|, by enumeration."""
    points = _points(index_set)
    gamma = np.asarray(gamma, dtype=np.int64)
    if points.shape[0] == 0:
        return Fraction(0)
    if gamma.shape != (points.shape[1],):
        raise ArgumentError(f"group element {tuple(gamma)} does not match dimension {points.shape[1]}")
    _, counts = np.unique(np.vstack([points, points + gamma]), axis=0, return_counts=True)
    common = int(np.count_nonzero(counts == 2))
    return Fraction(2 * (points.shape[0] - common), points.shape[0])


def boundary_layers(thickness: float, resolution: int) -> int:
    """Mesh steps covered by a thickness in g_0 units, at least one."""
    return max(1, math.ceil(round(thickness * resolution, 9)))


def thicken(box: FolnerBox, thickness: float) -> ThickenedBoundary:
    """
    Split the vertices of D into the layer within ``thickness`` of the complement and the core.

    A vertex is in the layer iff its l-infinity step count to the nearest vertex
    outside D is at most ``boundary_layers(thickness, m)``; the outermost vertex
    layer is one step from the outside.
    """
    if not thickness > 0:
        raise ArgumentError(f"thickness must be positive, got {thickness}")
    layers = boundary_layers(thickness, box.resolution)
    shape = box.vertex_shape()
    steps = np.full(shape, np.iinfo(np.int64).max, dtype=np.int64)
    for axis, n in enumerate(shape):
        k = np.arange(n, dtype=np.int64)
        along = np.minimum(k + 1, n - k)
        view = [1] * len(shape)
        view[axis] = n
        steps = np.minimum(steps, along.reshape(view))
    boundary = steps <= layers
    return ThickenedBoundary(
        box=box,
        thickness=thickness,
        layers=layers,
        boundary_mask=boundary,
        core_mask=~boundary,
    )


def isoperimetric_ratio(box: FolnerBox, thickness: float) -> Fraction:
    """vol_0(boundary layer of D) / vol_0(D); the h^d vertex weights cancel."""
    layer = thicken(box, thickness)
    return Fraction(layer.boundary_size, box.vertex_count)


def isoperimetric_bound(box: FolnerBox, thickness: float) -> float:
    """The explicit box bound 2 d t (1 + 1/(2L))^{d-1} / L on the isoperimetric ratio."""
    d, radius = box.dimension, box.radius
    if radius == 0:
        return math.inf
    return 2 * d * thickness * (1 + 1 / (2 * radius)) ** (d - 1) / radius


def sequence_description(sequence: AdmissibleSequence) -> List[dict]:
    """Per-box rows for the experiment payloads."""
    ratios = sequence.temperedness_ratios
    return [
        {
            "j": j,
            "radius": box.radius,
            "cardinality": box.cardinality,
            "vertex_count": box.vertex_count,
            "temperedness": float(ratios[j - 1]) if j > 0 else 0.0,
        }
        for j, box in enumerate(sequence.boxes)
    ]
