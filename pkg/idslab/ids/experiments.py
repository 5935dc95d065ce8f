import itertools
import math
from typing import List, Optional, Sequence

import numpy as np

from idslab.exceptions import ArgumentError
from idslab.geometry.folner import isoperimetric_ratio
from idslab.heat.lab import diffusive_range
from idslab.ids.lab import (
    as_grid,
    supercell_sample,
    abstract_ids,
    counting_ids,
    free_ids,
    laplace_transform,
    trace_gaps,
)
from idslab.models.config import ModelConfig
from idslab.models.estimates import (
    ConvergenceReport,
    EdgeStatistics,
    ErgodicRow,
    ErgodicTable,
    ShiftIdentityReport,
    TraceGapFit,
)
from idslab.models.geometry import AdmissibleSequence, FolnerBox
from idslab.operators.assembly import build_dirichlet
from idslab.random_model.bumps import axis_weights, bump_stencil
from idslab.random_model.sampling import cell_amplitudes, cell_potentials, sample_metric
from idslab.spectral.engine import count_below, eigendecompose, lowest_eigenvalue, region_weights
from idslab.spectral.inertia import DEFAULT_DENSE_CEILING
from idslab.utils import logger
from idslab.utils.parallel import ordered_map

DEFAULT_GAP_SLACK = 0.25
OBSERVABLES = ("amplitude", "potential", "volume", "heat-trace", "constant")


def flat_points(curve: np.ndarray, tolerance: Optional[float] = None) -> np.ndarray:
    """
    Interior grid indices where ``curve`` is locally flat.

    A point is flat when both its left and right grid differences are at most
    ``tolerance``; the default is the mean increment of the curve.
    """
    if curve.size < 3:
        return np.zeros(0, dtype=np.int64)
    steps = np.abs(np.diff(curve))
    if tolerance is None:
        tolerance = float(abs(curve[-1] - curve[0])) / (curve.size - 1)
    flat = (steps[:-1] <= tolerance) & (steps[1:] <= tolerance)
    return np.flatnonzero(flat) + 1


def _seed_run(cfg, seed, sequence, energies, times, margin, dense_ceiling):
    counted, laplace, lowest, free = [], [], [], []
    for box in sequence.boxes:
        hamiltonian = build_dirichlet(cfg, seed, box)
        counted.append(counting_ids(cfg, seed, box, energies, dense_ceiling, hamiltonian=hamiltonian))
        laplace.append(laplace_transform(cfg, seed, box, times, dense_ceiling, hamiltonian=hamiltonian).values)
        lowest.append(lowest_eigenvalue(hamiltonian, dense_ceiling))
        if margin is not None:
            free.append(free_ids(cfg, seed, box, energies, margin, dense_ceiling).values)
    logger.debug(f"exhaustion seed={seed}: radii {sequence.radii} done")
    return counted, np.array(laplace), lowest, free


def _z_scores(difference: np.ndarray, error: np.ndarray) -> np.ndarray:
    scores = np.zeros_like(difference)
    positive = error > 0
    scores[positive] = difference[positive] / error[positive]
    scores[~positive & (difference != 0)] = np.inf
    return scores


def exhaustion_experiment(
    cfg: ModelConfig,
    seeds: Sequence[int],
    sequence: AdmissibleSequence,
    energies: Sequence[float],
    times: Sequence[float],
    abstract_period: Optional[int] = None,
    flat_tolerance: Optional[float] = None,
    margin: Optional[int] = None,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
    workers: int = 1,
) -> ConvergenceReport:
    """
    Counting functions N^j along ``sequence`` for every seed, compared across j,
    across seeds, with the abstract quotient, and (with ``margin``) with the free
    counting functions.

    Args:
        cfg (ModelConfig): Model parameters.
        seeds (Sequence[int]): Realizations.
        sequence (AdmissibleSequence): Boxes D_j.
        energies (Sequence[float]): lambda grid.
        times (Sequence[float]): t grid of the Laplace-transform comparison.
        abstract_period (int): Torus period of the abstract estimator; 2 L_max + 1 by default.
        flat_tolerance (float): Threshold of the local flatness test.
        margin (int): Ambient margin for the free counting functions; skipped when None.
        workers (int): Threads mapped over seeds.

    Returns:
        ConvergenceReport: Cauchy differences, cross-seed spread, distances and edges.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ArgumentError("exhaustion needs at least one seed")
    energies = as_grid(energies, "energy")
    times = as_grid(times, "time")
    radii = sequence.radii
    period = abstract_period or 2 * radii[-1] + 1

    runs = ordered_map(
        lambda s: _seed_run(cfg, s, sequence, energies, times, margin, dense_ceiling), seeds, workers
    )
    curves = np.array([[est.values for est in counted] for counted, _, _, _ in runs])
    laplace = np.array([lap for _, lap, _, _ in runs])
    lowest = np.array([low for _, _, low, _ in runs])
    ddof = 1 if len(seeds) > 1 else 0

    mean_curves = curves.mean(axis=0)
    spread = curves.std(axis=0, ddof=ddof)
    median = energies.size // 2
    cauchy = {
        seed: [float(np.max(np.abs(curves[k, j + 1] - curves[k, j]))) for j in range(len(radii) - 1)]
        for k, seed in enumerate(seeds)
    }
    flat = flat_points(mean_curves[-1], flat_tolerance)

    abstract = abstract_ids(
        cfg, seeds, energies, kind="energy", period=period, dense_ceiling=dense_ceiling, workers=workers
    )
    distance = float(np.max(np.abs(mean_curves[-1][flat] - abstract.values[flat]), initial=0.0))

    free_gaps = None
    if margin is not None:
        free = np.array([f for _, _, _, f in runs]).mean(axis=0)
        free_gaps = [
            float(np.max(np.abs(mean_curves[j][flat] - free[j][flat]), initial=0.0))
            for j in range(len(radii))
        ]

    laplace_means = laplace.mean(axis=0)
    laplace_abstract = abstract_ids(
        cfg, seeds, times, kind="time", period=period, dense_ceiling=dense_ceiling, workers=workers
    )
    laplace_error = laplace[:, -1].std(axis=0, ddof=ddof) / math.sqrt(len(seeds))
    abstract_error = (
        laplace_abstract.standard_error
        if laplace_abstract.standard_error is not None
        else np.zeros_like(times)
    )
    z_scores = _z_scores(
        laplace_means[-1] - laplace_abstract.values, np.sqrt(laplace_error**2 + abstract_error**2)
    )

    positive = np.flatnonzero(abstract.values > 0)
    first = int(positive[0]) if positive.size else energies.size - 1
    support_inf = float(energies[max(first - 1, 0)])
    resolution = float(energies[1] - energies[0]) if energies.size > 1 else 0.0
    bottom = float(lowest[:, -1].min())

    return ConvergenceReport(
        radii=radii,
        seeds=seeds,
        energies=energies,
        times=times,
        mean_curves=mean_curves,
        cauchy_differences=cauchy,
        std_median=[float(s) for s in spread[:, median]],
        std_max=[float(s) for s in spread.max(axis=1)],
        flat_points=flat,
        abstract=abstract,
        abstract_distance=distance,
        free_gaps=free_gaps,
        laplace_means=laplace_means,
        laplace_abstract=laplace_abstract,
        laplace_z_scores=z_scores,
        lowest_eigenvalue=bottom,
        support_inf=support_inf,
        support_consistent=bottom >= support_inf - resolution,
        edge_means=[float(v) for v in lowest.mean(axis=0)],
        edge_stds=[float(v) for v in lowest.std(axis=0, ddof=ddof)],
        estimates=[est for counted, _, _, _ in runs for est in counted],
    )


def gap_thickness(t: float, resolution: int) -> float:
    """h(t): the diffusive range of the walk, at least one mesh step."""
    return max(diffusive_range(t), 1.0 / resolution)


def trace_gap_control(
    cfg: ModelConfig,
    seeds: Sequence[int],
    sequence: AdmissibleSequence,
    times: Sequence[float],
    margin: int,
    slack: float = DEFAULT_GAP_SLACK,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
    workers: int = 1,
) -> List[TraceGapFit]:
    """
    Fit kappa(t) in trace_gap(t, L) <= kappa(t) * isoperimetric_ratio(D_L, h(t)).

    The constant is fitted on the leading boxes of ``sequence`` and tested on the
    last one, one fit per heat time.

    Args:
        cfg (ModelConfig): Model parameters.
        seeds (Sequence[int]): Realizations; the fit uses the mean gap over seeds.
        sequence (AdmissibleSequence): Boxes D_j.
        times (Sequence[float]): Heat times.
        margin (int): Ambient margin of the free trace.
        slack (float): Relative excess allowed on the last box.
        workers (int): Threads mapped over seeds.

    Returns:
        list[TraceGapFit]: One fit per time, in grid order.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ArgumentError("trace-gap control needs at least one seed")
    if slack < 0:
        raise ArgumentError(f"slack must be nonnegative, got {slack}")
    grid = as_grid(times, "time")
    gaps = np.array(
        ordered_map(
            lambda s: [trace_gaps(cfg, s, box, grid, margin, dense_ceiling) for box in sequence.boxes],
            seeds,
            workers,
        )
    )
    mean_gaps = gaps.mean(axis=0)

    fits = []
    for i, t in enumerate(grid):
        thickness = gap_thickness(float(t), cfg.resolution)
        ratios = np.array([float(isoperimetric_ratio(box, thickness)) for box in sequence.boxes])
        leading = slice(0, max(len(ratios) - 1, 1))
        kappa = float(np.max(mean_gaps[leading, i] / ratios[leading]))
        fits.append(
            TraceGapFit(
                time=float(t),
                thickness=thickness,
                margin=margin,
                radii=sequence.radii,
                ratios=ratios.tolist(),
                gaps=gaps[:, :, i].tolist(),
                mean_gaps=mean_gaps[:, i].tolist(),
                kappa=kappa,
                slack=slack,
            )
        )
    logger.debug(f"trace-gap control radii={sequence.radii} margin={margin}: kappa {[f.kappa for f in fits]}")
    return fits


def spectral_edge_statistics(
    cfg: ModelConfig,
    seeds: Sequence[int],
    sequence: AdmissibleSequence,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
    workers: int = 1,
) -> EdgeStatistics:
    """Mean and spread across seeds of the bottom of the Dirichlet spectrum, per box."""
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ArgumentError("edge statistics need at least one seed")
    lowest = np.array(
        ordered_map(
            lambda s: [lowest_eigenvalue(build_dirichlet(cfg, s, b), dense_ceiling) for b in sequence.boxes],
            seeds,
            workers,
        )
    )
    ddof = 1 if len(seeds) > 1 else 0
    return EdgeStatistics(
        radii=sequence.radii,
        means=[float(v) for v in lowest.mean(axis=0)],
        stds=[float(v) for v in lowest.std(axis=0, ddof=ddof)],
        minima=[float(v) for v in lowest.min(axis=0)],
    )


def _sinhc(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nonzero = z != 0
    out[nonzero] = np.sinh(z[nonzero]) / z[nonzero]
    return out


def expected_cell_volume(cfg: ModelConfig) -> float:
    """
    E[vol_omega(F)] = h^d sum_{x in F} prod_g E[e^{d a_g b(x - g)}].

    For a ~ U[-A, A], E[e^{s a}] = sinh(s A) / (s A), and the amplitudes are independent.
    """
    m, d = cfg.resolution, cfg.dimension
    _, weights = axis_weights(cfg.bump, np.arange(m) / m)
    stencil = range(weights.shape[1])
    total = 0.0
    for vertex in itertools.product(range(m), repeat=d):
        factor = 1.0
        for combo in itertools.product(stencil, repeat=d):
            b = math.prod(weights[k, o] for k, o in zip(vertex, combo))
            factor *= float(_sinhc(d * cfg.metric_amplitude * b))
        total += factor
    return total * cfg.mesh_width**d


def _cell_volumes(cfg: ModelConfig, seed: int, box: FolnerBox) -> np.ndarray:
    metric = sample_metric(cfg, box.window, seed)
    m = cfg.resolution
    blocks = []
    for n in box.window.cell_shape:
        blocks.extend([n, m])
    return metric.mu.reshape(blocks).sum(axis=tuple(range(1, 2 * cfg.dimension, 2))).ravel()


def ergodic_average(
    cfg: ModelConfig,
    seed: int,
    observable: str,
    sequence: AdmissibleSequence,
    time: float = 1.0,
    margin: Optional[int] = None,
    constant: float = 1.0,
    reference_seeds: int = 8,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> ErgodicTable:
    """
    Birkhoff averages (1/|I_j|) sum_{g in I_j^{-1}} f(T_g omega) along ``sequence``.

    Observables: ``amplitude`` (a_0, mean 0), ``potential`` (q_0, mean Q/2),
    ``volume`` (vol(F), exact mean), ``heat-trace`` (tr(chi_F e^{-tH}), mean from
    ``reference_seeds`` periodic supercells) and ``constant``. The envelope is
    4 sigma / sqrt(|I_j|); for the correlated observables sigma is the sample
    spread inflated by the square root of the bump stencil volume.
    """
    if observable not in OBSERVABLES:
        raise ArgumentError(f"unknown observable {observable!r}; expected one of {OBSERVABLES}")
    correlation = math.sqrt(len(bump_stencil(cfg.bump)) ** cfg.dimension)

    expectation_reference = None
    if observable == "heat-trace":
        period = 2 * sequence.radii[-1] + 1
        ref = [
            supercell_sample(cfg, seed + 1 + k, np.array([time]), "time", period, (0,) * cfg.dimension, dense_ceiling)[0][0]
            for k in range(reference_seeds)
        ]
        expectation_reference = (float(np.mean(ref)), float(np.std(ref, ddof=1)) if len(ref) > 1 else 0.0)

    rows: List[ErgodicRow] = []
    for box in sequence.boxes:
        cells = -box.index_set()
        n = cells.shape[0]
        if observable == "amplitude":
            samples = cell_amplitudes(cfg, seed, cells)
            expectation, sigma = 0.0, cfg.metric_amplitude / math.sqrt(3.0)
        elif observable == "potential":
            samples = cell_potentials(cfg, seed, cells)
            expectation, sigma = cfg.potential_amplitude / 2.0, cfg.potential_amplitude / math.sqrt(12.0)
        elif observable == "constant":
            samples = np.full(n, constant)
            expectation, sigma = constant, 0.0
        elif observable == "volume":
            samples = _cell_volumes(cfg, seed, box)
            expectation = expected_cell_volume(cfg)
            sigma = correlation * (float(np.std(samples, ddof=1)) if n > 1 else 0.0)
        else:
            reach = margin if margin is not None else math.ceil(7.0 * math.sqrt(2.0 * time))
            ambient = build_dirichlet(cfg, seed, box.enlarged(reach))
            summary = eigendecompose(ambient, dense_ceiling)
            mask = np.zeros(ambient.dimension, dtype=bool)
            mask[ambient.index_of(box.vertex_coordinates())] = True
            trace = float(np.sum(np.exp(-time * summary.eigenvalues) * region_weights(summary, mask)))
            samples = np.array([trace / n])
            expectation, spread = expectation_reference
            sigma = correlation * spread * (1.0 + 1.0 / math.sqrt(max(reference_seeds, 1)))

        average = (math.fsum(samples.tolist()) / n) if observable != "heat-trace" else float(samples[0])
        deviation = abs(average - expectation)
        envelope = 4.0 * sigma / math.sqrt(n)
        rows.append(
            ErgodicRow(
                radius=box.radius,
                cardinality=n,
                average=average,
                expectation=expectation,
                deviation=deviation,
                envelope=envelope,
                within=deviation <= envelope,
            )
        )
    return ErgodicTable(observable=observable, seed=seed, rows=rows)


def shift_identity_check(
    cfg: ModelConfig,
    seed: int,
    box: FolnerBox,
    c: float,
    energies: Sequence[float],
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> ShiftIdentityReport:
    """N_{H + c}(lambda + c) == N_H(lambda) at every grid point, as integer counts."""
    grid = as_grid(energies, "energy")
    hamiltonian = build_dirichlet(cfg, seed, box)
    raised = hamiltonian.shifted(c)
    mismatches = sum(
        int(count_below(raised, float(e) + c, dense_ceiling) != count_below(hamiltonian, float(e), dense_ceiling))
        for e in grid
    )
    same_volume = raised.volume == hamiltonian.volume
    return ShiftIdentityReport(
        shift=c,
        grid_points=int(grid.size),
        mismatches=mismatches,
        volume_unchanged=same_volume,
        passed=mismatches == 0 and same_volume,
    )
