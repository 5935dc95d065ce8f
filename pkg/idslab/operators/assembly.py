from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from idslab.exceptions import ArgumentError
from idslab.models.config import ModelConfig
from idslab.models.fields import MetricField, PotentialField
from idslab.models.geometry import CellWindow, FolnerBox
from idslab.models.hamiltonian import BoundaryCondition, DiscreteHamiltonian, Provenance
from idslab.random_model.sampling import sample_metric, sample_potential
from idslab.utils.save_artifact import save_artifact


def _field_slice(field, window: CellWindow) -> Tuple[slice, ...]:
    m = field.resolution
    start = window.vertex_lo(m) - field.window.vertex_lo(m)
    return tuple(slice(int(s), int(s) + n) for s, n in zip(start, window.vertex_shape(m)))


def _symmetric_operator(
    mu: np.ndarray,
    potential: np.ndarray,
    edges: np.ndarray,
    weights: np.ndarray,
    boundary_weights: np.ndarray,
) -> Tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    """Assemble H^ with both triangles written from the same value array.

    Parallel edges (tori with fewer than three vertices per side) are merged first,
    in edge-list order, and self-loops dropped.
    """
    n = mu.shape[0]
    keep = edges[:, 0] != edges[:, 1]
    pairs = np.sort(edges[keep], axis=1).reshape(-1, 2)
    merged = weights[keep]
    if pairs.shape[0]:
        pairs, inverse = np.unique(pairs, axis=0, return_inverse=True)
        merged = np.zeros(pairs.shape[0])
        np.add.at(merged, inverse.ravel(), weights[keep])

    i, j = pairs[:, 0], pairs[:, 1]
    degree = np.zeros(n)
    np.add.at(degree, i, merged)
    np.add.at(degree, j, merged)
    diagonal = (degree + boundary_weights) / mu + potential
    off = -merged / np.sqrt(mu[i] * mu[j])

    rows = np.concatenate([np.arange(n), i, j])
    cols = np.concatenate([np.arange(n), j, i])
    data = np.concatenate([diagonal, off, off])
    matrix = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    return matrix, pairs, merged


def _provenance(field: MetricField, window: CellWindow) -> Provenance:
    return Provenance(
        seed=field.seed,
        window=window,
        config_hash=field.config.digest(),
        shift=field.shift,
    )


def assemble_dirichlet(
    metric: MetricField, potential: PotentialField, box: FolnerBox
) -> DiscreteHamiltonian:
    """
    Restrict H = Delta_omega + V to the vertices of ``box`` with Dirichlet conditions.

    Edges leaving the box are deleted from the off-diagonal and keep their
    conductance on the diagonal. The metric must cover the box plus one cell layer
    (the lower face edges live on vertices outside the box).

    Args:
        metric (MetricField): Sampled metric.
        potential (PotentialField): Sampled potential.
        box (FolnerBox): The domain D.

    Returns:
        DiscreteHamiltonian: The symmetrized Dirichlet operator on D.
    """
    window = box.window
    if metric.resolution != box.resolution or potential.resolution != box.resolution:
        raise ArgumentError("field and domain resolutions differ")
    if metric.period is not None or potential.period is not None:
        raise ArgumentError("Dirichlet assembly needs non-periodic fields")
    if not metric.window.contains(window.enlarged(1)):
        raise ArgumentError(
            f"metric window {metric.window.lo}..{metric.window.hi} does not cover "
            f"{window.lo}..{window.hi} plus one cell layer"
        )
    if not potential.window.contains(window):
        raise ArgumentError("potential window does not cover the domain")
    if metric.shift != potential.shift or metric.seed != potential.seed:
        raise ArgumentError("metric and potential come from different realizations")

    shape = box.vertex_shape()
    n = int(np.prod(shape))
    index = np.arange(n).reshape(shape)
    inner = _field_slice(metric, window)
    mu = metric.mu[inner].ravel()
    values = potential.values[_field_slice(potential, window)].ravel()

    edges: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    boundary_weights = np.zeros(n)
    for axis, conductance in enumerate(metric.conductance):
        forward = conductance[inner]
        head = [slice(None)] * len(shape)
        tail = [slice(None)] * len(shape)
        head[axis] = slice(0, shape[axis] - 1)
        tail[axis] = slice(1, shape[axis])
        edges.append(np.stack([index[tuple(head)].ravel(), index[tuple(tail)].ravel()], axis=1))
        weights.append(forward[tuple(head)].ravel())

        # edge to the deleted vertex beyond the upper face
        upper = [slice(None)] * len(shape)
        upper[axis] = shape[axis] - 1
        np.add.at(boundary_weights, index[tuple(upper)].ravel(), forward[tuple(upper)].ravel())

        # edge from the deleted vertex below the lower face, stored on that vertex
        below = list(inner)
        start = inner[axis].start - 1
        below[axis] = slice(start, start + 1)
        lower = [slice(None)] * len(shape)
        lower[axis] = slice(0, 1)
        np.add.at(boundary_weights, index[tuple(lower)].ravel(), conductance[tuple(below)].ravel())

    matrix, pairs, merged = _symmetric_operator(
        mu, values, np.concatenate(edges), np.concatenate(weights), boundary_weights
    )
    return DiscreteHamiltonian(
        vertices=box.vertex_coordinates(),
        vertex_lo=tuple(int(k) for k in window.vertex_lo(box.resolution)),
        vertex_shape=shape,
        resolution=box.resolution,
        matrix=matrix,
        mu=mu,
        potential=values,
        edges=pairs,
        edge_weights=merged,
        boundary_weights=boundary_weights,
        boundary=BoundaryCondition.DIRICHLET,
        provenance=_provenance(metric, window),
    )


def supercell_period(radius: Optional[int] = None, period: Optional[int] = None) -> int:
    if (radius is None) == (period is None):
        raise ArgumentError("give exactly one of radius or period")
    if radius is not None:
        if radius < 1:
            raise ArgumentError(f"supercell radius must be >= 1, got {radius}")
        return 2 * radius + 1
    if period < 1:
        raise ArgumentError(f"supercell period must be >= 1, got {period}")
    return period


def assemble_supercell(
    metric: MetricField,
    potential: PotentialField,
    radius: Optional[int] = None,
    period: Optional[int] = None,
) -> DiscreteHamiltonian:
    """
    Assemble H on the torus of P cells per side with wrapped edges.

    P = 2 * radius + 1, or ``period`` directly. Both fields must be periodic
    realizations sampled on exactly one period.
    """
    p = supercell_period(radius, period)
    d = metric.window.dimension
    for field in (metric, potential):
        if field.period != p or field.window.cell_shape != (p,) * d:
            raise ArgumentError(f"fields must be sampled periodically on one period of {p} cells")
    if metric.window != potential.window or metric.shift != potential.shift:
        raise ArgumentError("metric and potential cover different tori")

    shape = metric.vertex_shape
    n = int(np.prod(shape))
    index = np.arange(n).reshape(shape)
    edges = []
    for axis in range(d):
        edges.append(np.stack([index.ravel(), np.roll(index, -1, axis=axis).ravel()], axis=1))
    weights = np.concatenate([c.ravel() for c in metric.conductance])

    mu = metric.mu.ravel()
    values = potential.values.ravel()
    matrix, pairs, merged = _symmetric_operator(
        mu, values, np.concatenate(edges), weights, np.zeros(n)
    )
    return DiscreteHamiltonian(
        vertices=metric.window.vertex_coordinates(metric.resolution),
        vertex_lo=tuple(int(k) for k in metric.window.vertex_lo(metric.resolution)),
        vertex_shape=shape,
        resolution=metric.resolution,
        matrix=matrix,
        mu=mu,
        potential=values,
        edges=pairs,
        edge_weights=merged,
        boundary_weights=np.zeros(n),
        boundary=BoundaryCondition.PERIODIC_SUPERCELL,
        period=p,
        provenance=_provenance(metric, metric.window),
    )


def check_box(cfg: ModelConfig, box: FolnerBox) -> None:
    if box.dimension != cfg.dimension or box.resolution != cfg.resolution:
        raise ArgumentError(
            f"box (d={box.dimension}, m={box.resolution}) does not match the model "
            f"(d={cfg.dimension}, m={cfg.resolution})"
        )


def build_dirichlet(
    cfg: ModelConfig, seed: int, box: FolnerBox, shift: Optional[Sequence[int]] = None
) -> DiscreteHamiltonian:
    """Sample the realization T_shift(omega) around ``box`` and assemble H^D on it."""
    check_box(cfg, box)
    metric = sample_metric(cfg, box.window.enlarged(1), seed, shift=shift)
    potential = sample_potential(cfg, box.window, seed, shift=shift)
    return assemble_dirichlet(metric, potential, box)


def build_supercell(
    cfg: ModelConfig,
    seed: int,
    radius: Optional[int] = None,
    period: Optional[int] = None,
    shift: Optional[Sequence[int]] = None,
) -> DiscreteHamiltonian:
    """Sample the periodic realization on one period and assemble the torus operator."""
    p = supercell_period(radius, period)
    window = CellWindow(lo=(0,) * cfg.dimension, hi=(p - 1,) * cfg.dimension)
    metric = sample_metric(cfg, window, seed, shift=shift, period=p)
    potential = sample_potential(cfg, window, seed, shift=shift, period=p)
    return assemble_supercell(metric, potential, period=p)


def write_coordinate_matrix(hamiltonian: DiscreteHamiltonian, directory: str, filename: str = "matrix.txt") -> str:
    """
    Export the upper triangle of H^ as ``row col value`` lines.

    The first line is ``n nnz``; indices are 0-based rows of ``hamiltonian.vertices``;
    values carry 17 significant digits.
    """
    upper = sp.triu(hamiltonian.matrix).tocoo()
    order = np.lexsort((upper.col, upper.row))
    lines = [f"{hamiltonian.dimension} {upper.nnz}"]
    for r, c, v in zip(upper.row[order], upper.col[order], upper.data[order]):
        lines.append(f"{r} {c} {format(v, '.17g')}")
    path, _ = save_artifact(filename, ("\n".join(lines) + "\n").encode(), base_dir=directory)
    return path
