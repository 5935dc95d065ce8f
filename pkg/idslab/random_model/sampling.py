import itertools
from functools import reduce
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from idslab.exceptions import ArgumentError, InternalError, ResourceLimitError
from idslab.models.config import ModelConfig
from idslab.models.fields import MetricField, ModelBoundsReport, PotentialField
from idslab.models.geometry import CellWindow
from idslab.random_model.bumps import axis_weights
from idslab.random_model.counter_hash import (
    METRIC_LABEL,
    POTENTIAL_LABEL,
    derive_key,
    hash_uniform,
)
from idslab.utils.save_artifact import save_artifact
from idslab.utils.tables import csv_bytes

BOUND_TOLERANCE = 1e-12


def _as_offset(gamma: Optional[Sequence[int]], d: int) -> Tuple[int, ...]:
    if gamma is None:
        return (0,) * d
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != d:
        raise ArgumentError(f"group element {gamma} does not live in Z^{d}")
    return gamma


def _check_extent(cfg: ModelConfig, window: CellWindow) -> None:
    if window.max_abs_coordinate() > cfg.max_extent:
        raise ResourceLimitError(
            f"window {window.lo}..{window.hi} exceeds the maximum extent {cfg.max_extent}",
            ceiling="max_extent",
            limit=cfg.max_extent,
        )


def _metric_amplitude(cfg: ModelConfig) -> Callable[[np.ndarray], np.ndarray]:
    return lambda u: cfg.metric_amplitude * (2.0 * u - 1.0)


def _potential_amplitude(cfg: ModelConfig) -> Callable[[np.ndarray], np.ndarray]:
    return lambda u: cfg.potential_amplitude * u


def cell_amplitudes(
    cfg: ModelConfig, seed: int, cells: np.ndarray, period: Optional[int] = None
) -> np.ndarray:
    """Metric amplitudes a_g ~ U[-A, A] for the cells given as rows of ``cells``."""
    key = derive_key(seed, METRIC_LABEL)
    return _metric_amplitude(cfg)(hash_uniform(key, cells, period))


def cell_potentials(
    cfg: ModelConfig, seed: int, cells: np.ndarray, period: Optional[int] = None
) -> np.ndarray:
    """Potential amplitudes q_g ~ U[0, Q] for the cells given as rows of ``cells``."""
    key = derive_key(seed, POTENTIAL_LABEL)
    return _potential_amplitude(cfg)(hash_uniform(key, cells, period))


def _superpose(
    cfg: ModelConfig,
    key: np.uint64,
    amplitude: Callable[[np.ndarray], np.ndarray],
    half_positions: List[np.ndarray],
    period: Optional[int],
) -> np.ndarray:
    """Evaluate sum_g amp(g) b(x - g) on the tensor grid of ``half_positions``.

    Positions are integers in half-mesh units (x = p / 2m), so the containing cell
    and the fractional offset are exact and translation by a whole cell changes
    neither the weights nor the summation order.
    """
    two_m = 2 * cfg.resolution
    cells = [np.floor_divide(p, two_m) for p in half_positions]
    stencils = [axis_weights(cfg.bump, np.mod(p, two_m) / two_m) for p in half_positions]
    offsets = stencils[0][0]

    lo = [int(c.min() + offsets.min()) for c in cells]
    hi = [int(c.max() + offsets.max()) for c in cells]
    table_window = CellWindow(lo=tuple(lo), hi=tuple(hi))
    table = amplitude(hash_uniform(key, table_window.cells(), period)).reshape(
        table_window.cell_shape
    )

    out = np.zeros(tuple(len(p) for p in half_positions))
    for combo in itertools.product(range(len(offsets)), repeat=len(half_positions)):
        index = [c - base + offsets[k] for c, base, k in zip(cells, lo, combo)]
        factor = reduce(
            np.multiply.outer, [w[:, k] for (_, w), k in zip(stencils, combo)]
        )
        out += table[np.ix_(*index)] * factor
    return out


def _half_positions(window: CellWindow, m: int, shift: Tuple[int, ...]) -> List[np.ndarray]:
    lo = window.translated(shift).vertex_lo(m)
    return [2 * (lo[i] + np.arange(n, dtype=np.int64)) for i, n in enumerate(window.vertex_shape(m))]


def _prepare(
    cfg: ModelConfig, window: CellWindow, shift: Optional[Sequence[int]], period: Optional[int]
) -> Tuple[int, ...]:
    if window.dimension != cfg.dimension:
        raise ArgumentError(
            f"window of dimension {window.dimension} for a model of dimension {cfg.dimension}"
        )
    if period is not None and period < 1:
        raise ArgumentError(f"period must be positive, got {period}")
    offset = _as_offset(shift, cfg.dimension)
    _check_extent(cfg, window)
    _check_extent(cfg, window.translated(offset))
    return offset


def _ensure_finite(name: str, *arrays: np.ndarray) -> None:
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise InternalError(f"non-finite values in the sampled {name}")


def sample_metric(
    cfg: ModelConfig,
    window: CellWindow,
    seed: int,
    shift: Optional[Sequence[int]] = None,
    period: Optional[int] = None,
) -> MetricField:
    """
    Sample the conformal metric of the realization T_shift(omega) on ``window``.

    Args:
        cfg (ModelConfig): Model parameters.
        window (CellWindow): Cells to cover; vertex arrays have its vertex shape.
        seed (int): Realization seed.
        shift (tuple[int, ...]): Group element g; values at x are those of omega at x + g.
        period (int): Optional torus period; amplitudes become a_{g mod period}.

    Returns:
        MetricField: Density, measure and edge conductances on the window.
    """
    offset = _prepare(cfg, window, shift, period)
    m, d, h = cfg.resolution, cfg.dimension, cfg.mesh_width
    key = derive_key(seed, METRIC_LABEL)
    amplitude = _metric_amplitude(cfg)

    positions = _half_positions(window, m, offset)
    phi = _superpose(cfg, key, amplitude, positions, period)
    edge_phi = []
    for axis in range(d):
        shifted = list(positions)
        shifted[axis] = positions[axis] + 1
        edge_phi.append(_superpose(cfg, key, amplitude, shifted, period))

    rho = np.exp(-d * phi)
    mu = h**d * np.exp(d * phi)
    conductance = tuple(h ** (d - 2) * np.exp((d - 2) * e) for e in edge_phi)
    _ensure_finite("metric", rho, mu, *conductance)

    cells = window.translated(offset).cells()
    return MetricField(
        config=cfg,
        seed=seed,
        window=window,
        shift=offset,
        period=period,
        phi=phi,
        rho=rho,
        mu=mu,
        edge_phi=tuple(edge_phi),
        conductance=conductance,
        amplitudes=cell_amplitudes(cfg, seed, cells, period).reshape(window.cell_shape),
    )


def sample_potential(
    cfg: ModelConfig,
    window: CellWindow,
    seed: int,
    shift: Optional[Sequence[int]] = None,
    period: Optional[int] = None,
) -> PotentialField:
    """Sample V = sum_g q_g u(x - g) on ``window``; arguments as in :func:`sample_metric`."""
    offset = _prepare(cfg, window, shift, period)
    key = derive_key(seed, POTENTIAL_LABEL)
    positions = _half_positions(window, cfg.resolution, offset)
    values = _superpose(cfg, key, _potential_amplitude(cfg), positions, period)
    _ensure_finite("potential", values)

    cells = window.translated(offset).cells()
    return PotentialField(
        config=cfg,
        seed=seed,
        window=window,
        shift=offset,
        period=period,
        values=values,
        amplitudes=cell_potentials(cfg, seed, cells, period).reshape(window.cell_shape),
    )


def shift_realization(field, gamma: Sequence[int]):
    """
    Return the field of T_gamma(omega) on ``window - gamma``.

    The arrays are shared, only the labelling moves, so
    ``rho(shift_realization(f, g))(x) == rho(f)(x + g)`` bit for bit.
    """
    offset = _as_offset(gamma, field.window.dimension)
    window = field.window.translated(tuple(-g for g in offset))
    _check_extent(field.config, window)
    return field.model_copy(
        update={
            "window": window,
            "shift": tuple(s + g for s, g in zip(field.shift, offset)),
        }
    )


def _edge_differences(values: np.ndarray, periodic: bool) -> List[np.ndarray]:
    if periodic:
        return [np.roll(values, -1, axis=i) - values for i in range(values.ndim)]
    return [np.diff(values, axis=i) for i in range(values.ndim)]


def verify_model_bounds(field: MetricField, cfg: Optional[ModelConfig] = None) -> ModelBoundsReport:
    """
    Scan every vertex and edge of ``field`` against the density and gradient bounds.

    Args:
        field (MetricField): The field to scan.
        cfg (ModelConfig): Constants to check against; defaults to the field's own.

    Returns:
        ModelBoundsReport: Observed C_g and C_rho, and whether both bounds hold.
    """
    cfg = cfg or field.config
    d = cfg.dimension
    rho = field.rho
    density_min, density_max = float(rho.min()), float(rho.max())
    c_g_observed = max(density_max, 1.0 / density_min) ** (2.0 / d)

    steps = [np.abs(diff) for diff in _edge_differences(rho, field.period is not None)]
    steepest = max((float(s.max()) for s in steps if s.size), default=0.0)
    c_rho_observed = steepest / cfg.mesh_width

    envelope = cfg.c_g ** (d / 2.0)
    density_ok = (
        density_max <= envelope * (1.0 + BOUND_TOLERANCE)
        and density_min >= (1.0 - BOUND_TOLERANCE) / envelope
    )
    gradient_ok = c_rho_observed <= cfg.c_rho * (1.0 + BOUND_TOLERANCE) + BOUND_TOLERANCE
    return ModelBoundsReport(
        c_g_observed=c_g_observed,
        c_rho_observed=c_rho_observed,
        c_g=cfg.c_g,
        c_rho=cfg.c_rho,
        density_min=density_min,
        density_max=density_max,
        passed=density_ok and gradient_ok,
    )


def write_field_columns(field: MetricField, directory: str) -> Tuple[str, str]:
    """
    Write a metric field as two columnar CSV files for oracle cross-checks.

    ``vertices.csv``: ``vertex,k0..k{d-1},rho,mu``;
    ``edges.csv``: ``edge,axis,k0..k{d-1},w`` for the forward edge (k, k + e_axis).
    Vertices are numbered in C order of the window; floats carry 17 significant digits.

    Returns:
        tuple[str, str]: Paths of the vertex and edge files.
    """
    coords = field.window.vertex_coordinates(field.resolution)
    axes = [f"k{i}" for i in range(coords.shape[1])]

    vertex_rows = (
        (n, *k, r, u) for n, (k, r, u) in enumerate(zip(coords.tolist(), field.rho.ravel(), field.mu.ravel()))
    )
    vertex_path, _ = save_artifact(
        "vertices.csv", csv_bytes(["vertex", *axes, "rho", "mu"], vertex_rows), base_dir=directory
    )

    edge_rows = (
        (axis, *k, w)
        for axis, weights in enumerate(field.conductance)
        for k, w in zip(coords.tolist(), weights.ravel())
    )
    edge_rows = ((n, *row) for n, row in enumerate(edge_rows))
    edge_path, _ = save_artifact(
        "edges.csv", csv_bytes(["edge", "axis", *axes, "w"], edge_rows), base_dir=directory
    )
    return vertex_path, edge_path
