import math
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ive

from idslab.exceptions import ArgumentError
from idslab.models.config import ModelConfig
from idslab.models.estimates import EstimateProvenance, IDSEstimate, LaplaceTable
from idslab.models.geometry import CellWindow, FolnerBox
from idslab.models.hamiltonian import DiscreteHamiltonian
from idslab.operators.assembly import build_dirichlet, build_supercell, supercell_period
from idslab.spectral.engine import count_below, eigendecompose, region_weights
from idslab.spectral.inertia import DEFAULT_DENSE_CEILING
from idslab.utils.parallel import ordered_map


def as_grid(values: Sequence[float], name: str) -> np.ndarray:
    grid = np.asarray(values, dtype=float).ravel()
    if grid.size == 0:
        raise ArgumentError(f"{name} grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ArgumentError(f"{name} grid must be sorted ascending")
    return grid


def default_energy_grid(cfg: ModelConfig, points: int = 200) -> np.ndarray:
    """``points`` energies on [0, Gershgorin bound of the flat operator + Q]."""
    top = 4 * cfg.dimension * cfg.resolution**2 + cfg.potential_amplitude
    return np.linspace(0.0, top, points)


def counting_ids(
    cfg: ModelConfig,
    seed: int,
    box: FolnerBox,
    energies: Sequence[float],
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
    hamiltonian: Optional[DiscreteHamiltonian] = None,
) -> IDSEstimate:
    """
    Normalized eigenvalue counting function N^D(lambda) = #{lambda_i < lambda} / vol(D).

    Counts come from the inertia of H^D - lambda I at every grid point; no
    eigensolve is needed.
    """
    grid = as_grid(energies, "energy")
    hamiltonian = hamiltonian or build_dirichlet(cfg, seed, box)
    counts = np.array([count_below(hamiltonian, float(e), dense_ceiling) for e in grid], dtype=np.int64)
    volume = hamiltonian.volume
    return IDSEstimate(
        grid=grid,
        values=counts / volume,
        provenance=EstimateProvenance.DIRICHLET_EXHAUSTION,
        counts=counts,
        volume=volume,
        radius=box.radius,
        seeds=[seed],
        config_hash=cfg.digest(),
    )


def _restricted_counts(
    hamiltonian: DiscreteHamiltonian, box: FolnerBox, energies: np.ndarray, dense_ceiling: int
) -> Tuple[np.ndarray, float]:
    """tr(chi_D E(lambda)) for every lambda, and vol(D), from one eigendecomposition."""
    summary = eigendecompose(hamiltonian, dense_ceiling)
    mask = np.zeros(hamiltonian.dimension, dtype=bool)
    mask[hamiltonian.index_of(box.vertex_coordinates())] = True
    cumulative = np.concatenate([[0.0], np.cumsum(region_weights(summary, mask))])
    traces = cumulative[np.searchsorted(summary.eigenvalues, energies, side="left")]
    return traces, math.fsum(hamiltonian.mu[mask].tolist())


def free_ids(
    cfg: ModelConfig,
    seed: int,
    box: FolnerBox,
    energies: Sequence[float],
    margin: int,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> IDSEstimate:
    """
    Boundary-condition-free counting function tr(chi_D E_X(lambda)) / vol(D).

    X is proxied by D enlarged by ``margin`` cells with Dirichlet conditions on the
    outside. With ``margin == 0`` the restriction is the identity and the Dirichlet
    count is returned.
    """
    grid = as_grid(energies, "energy")
    if margin < 0:
        raise ArgumentError(f"margin must be nonnegative, got {margin}")
    if margin == 0:
        counted = counting_ids(cfg, seed, box, grid, dense_ceiling)
        return counted.model_copy(update={"provenance": EstimateProvenance.FREE_RESTRICTION})

    ambient = build_dirichlet(cfg, seed, box.enlarged(margin))
    traces, volume = _restricted_counts(ambient, box, grid, dense_ceiling)
    return IDSEstimate(
        grid=grid,
        values=traces / volume,
        provenance=EstimateProvenance.FREE_RESTRICTION,
        volume=volume,
        radius=box.radius,
        seeds=[seed],
        config_hash=cfg.digest(),
    )


def flat_heat_bound(cfg: ModelConfig, t: np.ndarray) -> np.ndarray:
    """On-diagonal free lattice kernel h^{-d} (e^{-2t/h^2} I_0(2t/h^2))^d."""
    h = cfg.mesh_width
    return h ** (-cfg.dimension) * ive(0, 2.0 * np.asarray(t, dtype=float) / h**2) ** cfg.dimension


def laplace_transform(
    cfg: ModelConfig,
    seed: int,
    box: FolnerBox,
    times: Sequence[float],
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
    hamiltonian: Optional[DiscreteHamiltonian] = None,
) -> LaplaceTable:
    """
    L(t) = tr(e^{-t H^D}) / vol(D) on a time grid, with the uniform bound C(t).

    The trace is the Stieltjes sum of e^{-t lambda} over the eigenvalue list, i.e.
    the Laplace transform of the counting measure of :func:`counting_ids`.
    """
    grid = as_grid(times, "time")
    if np.any(grid < 0):
        raise ArgumentError("heat times must be nonnegative")
    hamiltonian = hamiltonian or build_dirichlet(cfg, seed, box)
    eigenvalues = eigendecompose(hamiltonian, dense_ceiling, vectors=False).eigenvalues
    volume = hamiltonian.volume
    values = np.array([math.fsum(np.exp(-t * eigenvalues).tolist()) for t in grid]) / volume
    flat = flat_heat_bound(cfg, grid)
    bound = flat * cfg.c_g**cfg.dimension
    return LaplaceTable(
        times=grid,
        values=values,
        flat_bound=flat,
        bound=bound,
        bound_holds=bool(np.all(values <= bound * (1.0 + 1e-12))),
        volume=volume,
        radius=box.radius,
        seed=seed,
    )


def trace_gaps(
    cfg: ModelConfig,
    seed: int,
    box: FolnerBox,
    times: Sequence[float],
    margin: int,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> np.ndarray:
    """
    vol(D)^{-1} |tr(chi_D e^{-t H_X}) - tr(e^{-t H^D})| at every t, X the enlarged box.

    Both operators are diagonalized once for the whole time grid. Exactly 0 when
    ``margin == 0``.
    """
    grid = as_grid(times, "time")
    if np.any(grid < 0):
        raise ArgumentError(f"heat times must be nonnegative, got {grid.min()}")
    if margin < 0:
        raise ArgumentError(f"margin must be nonnegative, got {margin}")
    if margin == 0:
        return np.zeros_like(grid)
    inner = build_dirichlet(cfg, seed, box)
    ambient = build_dirichlet(cfg, seed, box.enlarged(margin))
    summary = eigendecompose(ambient, dense_ceiling)
    mask = np.zeros(ambient.dimension, dtype=bool)
    mask[ambient.index_of(inner.vertices)] = True
    weights = region_weights(summary, mask)
    eigenvalues = eigendecompose(inner, dense_ceiling, vectors=False).eigenvalues
    gaps = [
        abs(float(np.sum(np.exp(-t * summary.eigenvalues) * weights)) - float(np.sum(np.exp(-t * eigenvalues))))
        for t in grid
    ]
    return np.array(gaps) / inner.volume


def trace_gap(
    cfg: ModelConfig,
    seed: int,
    box: FolnerBox,
    t: float,
    margin: int,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> float:
    """:func:`trace_gaps` at a single time."""
    if t < 0:
        raise ArgumentError(f"heat time must be nonnegative, got {t}")
    return float(trace_gaps(cfg, seed, box, [t], margin, dense_ceiling)[0])


def _cell_mask(hamiltonian: DiscreteHamiltonian, cell: Tuple[int, ...]) -> np.ndarray:
    window = CellWindow(lo=cell, hi=cell)
    mask = np.zeros(hamiltonian.dimension, dtype=bool)
    mask[hamiltonian.index_of(window.vertex_coordinates(hamiltonian.resolution))] = True
    return mask


def supercell_sample(
    cfg: ModelConfig,
    seed: int,
    grid: np.ndarray,
    kind: str,
    period: int,
    cell: Tuple[int, ...],
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> Tuple[np.ndarray, float]:
    """tr(chi_F f(H)) on the grid and vol(F) for one periodic realization."""
    hamiltonian = build_supercell(cfg, seed, period=period)
    summary = eigendecompose(hamiltonian, dense_ceiling)
    mask = _cell_mask(hamiltonian, cell)
    weights = region_weights(summary, mask)
    if kind == "energy":
        cumulative = np.concatenate([[0.0], np.cumsum(weights)])
        numerator = cumulative[np.searchsorted(summary.eigenvalues, grid, side="left")]
    else:
        numerator = np.array([np.sum(np.exp(-t * summary.eigenvalues) * weights) for t in grid])
    return numerator, math.fsum(hamiltonian.mu[mask].tolist())


def abstract_ids(
    cfg: ModelConfig,
    seeds: Sequence[int],
    grid: Sequence[float],
    kind: Literal["energy", "time"] = "energy",
    radius: Optional[int] = None,
    period: Optional[int] = None,
    cell: Optional[Tuple[int, ...]] = None,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
    workers: int = 1,
) -> IDSEstimate:
    """
    Abstract density of states E[tr(chi_F f(H))] / E[vol(F)] over periodic supercells.

    For every seed the torus operator is diagonalized and tr(chi_F f(H)) and vol(F)
    are taken for the fundamental cell F = ``cell`` (the origin by default). Both are
    averaged over the seeds and then divided (ratio of means). The standard error
    follows from the delta method and is reported for two or more seeds.

    Args:
        kind (str): ``energy`` for f = projection(lambda), ``time`` for f = heat(t).
        radius (int): Supercell radius N (torus of 2N + 1 cells), or
        period (int): the torus period directly.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ArgumentError("abstract_ids needs at least one seed")
    if kind not in ("energy", "time"):
        raise ArgumentError(f"unknown estimator kind {kind!r}")
    values = as_grid(grid, kind)
    p = supercell_period(radius, period)
    cell = tuple(cell) if cell is not None else (0,) * cfg.dimension
    if len(cell) != cfg.dimension:
        raise ArgumentError(f"cell {cell} does not live in Z^{cfg.dimension}")

    samples = ordered_map(
        lambda s: supercell_sample(cfg, s, values, kind, p, cell, dense_ceiling), seeds, workers
    )
    numerators = np.stack([n for n, _ in samples])
    volumes = np.array([v for _, v in samples])
    mean_volume = float(np.mean(volumes))
    estimate = np.mean(numerators, axis=0) / mean_volume

    error = None
    if len(seeds) > 1:
        linearized = numerators - np.outer(volumes, estimate)
        error = np.std(linearized, axis=0, ddof=1) / (mean_volume * math.sqrt(len(seeds)))
    return IDSEstimate(
        variable=kind,
        grid=values,
        values=estimate,
        provenance=EstimateProvenance.ABSTRACT_QUOTIENT,
        standard_error=error,
        volume=mean_volume,
        seeds=seeds,
        config_hash=cfg.digest(),
    )
