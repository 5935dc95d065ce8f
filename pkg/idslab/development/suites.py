"""Experiment kinds and per-module invariant suites run by ``ids-lab run``."""

import math
from typing import List

import numpy as np

from idslab.decorator import experiment
from idslab.exceptions import ArgumentError, ResourceLimitError
from idslab.geometry.folner import (
    folner_defect,
    isoperimetric_bound,
    isoperimetric_ratio,
    make_admissible_sequence,
    sequence_description,
)
from idslab.heat.lab import (
    DEFAULT_MIN_FIT_TIME,
    check_domain_monotonicity,
    check_potential_monotonicity,
    default_margin,
    fit_decay,
    kernel,
    kernel_moments,
    nftb_experiment,
)
from idslab.ids.experiments import (
    ergodic_average,
    exhaustion_experiment,
    flat_points,
    shift_identity_check,
    trace_gap_control,
)
from idslab.ids.lab import abstract_ids, counting_ids, free_ids, laplace_transform
from idslab.models.experiment import ExperimentConfig, ExperimentKind, ExperimentOutcome
from idslab.models.geometry import AdmissibleSequence, CellWindow, FolnerBox
from idslab.operators.assembly import assemble_supercell, build_dirichlet
from idslab.operators.checks import equivariance_check, form_comparability
from idslab.random_model.sampling import sample_metric, sample_potential, verify_model_bounds
from idslab.spectral.engine import count_below, eigendecompose, heat_trace_hilbert_schmidt
from idslab.utils.parallel import ordered_map
from idslab.utils.tables import csv_bytes, json_bytes, to_jsonable

MOMENT_EXPONENTS = (0.5, 1.0, 2.0)
FORM_TRIALS = 64
HEAT_TRACE_RTOL = 1e-10
SPECTRUM_GUARD = 1e-8
ENVELOPE_ATOL = 1e-9

INVARIANT_SUITES = (
    "invariants:random-model",
    "invariants:geometry",
    "invariants:operators",
    "invariants:spectral",
)


def suite_kinds(kind: ExperimentKind) -> List[str]:
    """Registered experiment names run for ``kind``."""
    if kind == ExperimentKind.FULL_SUITE:
        return [k.value for k in ExperimentKind if k != ExperimentKind.FULL_SUITE] + list(INVARIANT_SUITES)
    return [kind.value]


def _sequence(config: ExperimentConfig) -> AdmissibleSequence:
    cfg = config.model
    return make_admissible_sequence(cfg.dimension, config.radii, cfg.resolution)


def _box(config: ExperimentConfig, radius: int) -> FolnerBox:
    return FolnerBox(dimension=config.model.dimension, radius=radius, resolution=config.model.resolution)


def _require_dense(box: FolnerBox, config: ExperimentConfig) -> None:
    if box.vertex_count > config.dense_ceiling:
        raise ResourceLimitError(
            f"box of radius {box.radius} has {box.vertex_count} vertices, above the dense "
            f"ceiling {config.dense_ceiling}; lower the margin or the radius",
            ceiling="dense_ceiling",
            limit=config.dense_ceiling,
        )


def _ambient_margin(config: ExperimentConfig, t: float) -> int:
    """The configured margin, else the nftb self-consistency margin at time ``t``."""
    if config.margin is not None:
        return config.margin
    return default_margin(t, config.grids.thicknesses)


def _non_increasing(values, tolerance: float = 0.0) -> bool:
    return all(b <= a + tolerance for a, b in zip(values, values[1:]))


@experiment(ExperimentKind.IDS_EXHAUSTION.value)
def ids_exhaustion(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    sequence = _sequence(config)
    report = exhaustion_experiment(
        cfg,
        config.seed_list(),
        sequence,
        config.energy_grid(),
        config.grids.times,
        abstract_period=config.supercell_period,
        flat_tolerance=config.tolerances.flatness,
        margin=config.margin,
        dense_ceiling=config.dense_ceiling,
        workers=config.parallelism,
    )
    rows = [
        (est.seeds[0], est.radius, energy, value)
        for est in report.estimates
        for energy, value in zip(est.grid, est.values)
    ]
    summary = {
        "sequence": sequence_description(sequence),
        "cauchy_differences": {str(k): v for k, v in report.cauchy_differences.items()},
        "std_median": report.std_median,
        "std_max": report.std_max,
        "flat_points": report.flat_points,
        "abstract": {
            "energy": report.abstract.grid,
            "N": report.abstract.values,
            "standard_error": report.abstract.standard_error,
        },
        "abstract_distance": report.abstract_distance,
        "free_gaps": report.free_gaps,
        "laplace": {
            "times": report.times,
            "dirichlet_mean": report.laplace_means[-1],
            "abstract": report.laplace_abstract.values,
            "z_scores": [float(z) if np.isfinite(z) else None for z in report.laplace_z_scores],
        },
        "lowest_eigenvalue": report.lowest_eigenvalue,
        "support_inf": report.support_inf,
        "edge_means": report.edge_means,
        "edge_stds": report.edge_stds,
    }
    finite_z = np.abs(report.laplace_z_scores[np.isfinite(report.laplace_z_scores)])
    scale = config.tolerances.agreement * cfg.mesh_width ** (-cfg.dimension)
    return ExperimentOutcome(
        payloads={
            "ids_exhaustion.csv": csv_bytes(["seed", "radius", "energy", "N"], rows),
            "convergence.json": json_bytes(summary),
        },
        checks={"support_consistent": report.support_consistent},
        metrics=to_jsonable(
            {
                "self_averaging": report.self_averaging,
                "abstract_distance": report.abstract_distance,
                "abstract_agreement": report.abstract_distance <= scale,
                "max_abs_z": float(finite_z.max(initial=0.0)),
                "laplace_agreement": bool(np.all(np.abs(report.laplace_z_scores) <= config.tolerances.z_score)),
            }
        ),
    )


@experiment(ExperimentKind.IDS_FREE.value)
def ids_free(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    sequence = _sequence(config)
    seeds = config.seed_list()
    energies = config.energy_grid()
    margin = _ambient_margin(config, config.time)
    _require_dense(sequence.boxes[-1].enlarged(margin), config)

    def run(seed: int):
        pairs = []
        for box in sequence.boxes:
            hamiltonian = build_dirichlet(cfg, seed, box)
            dirichlet = counting_ids(cfg, seed, box, energies, config.dense_ceiling, hamiltonian=hamiltonian)
            free = free_ids(cfg, seed, box, energies, margin, config.dense_ceiling)
            pairs.append((dirichlet.values, free.values))
        return pairs

    runs = ordered_map(run, seeds, config.parallelism)
    dirichlet = np.array([[d for d, _ in pairs] for pairs in runs])
    free = np.array([[f for _, f in pairs] for pairs in runs])
    rows = [
        (seed, box.radius, energy, dirichlet[k, j, i], free[k, j, i])
        for k, seed in enumerate(seeds)
        for j, box in enumerate(sequence.boxes)
        for i, energy in enumerate(energies)
    ]

    mean_dirichlet, mean_free = dirichlet.mean(axis=0), free.mean(axis=0)
    gaps = []
    for j in range(len(sequence.boxes)):
        flat = flat_points(mean_dirichlet[j], config.tolerances.flatness)
        gaps.append(float(np.max(np.abs(mean_dirichlet[j][flat] - mean_free[j][flat]), initial=0.0)))

    # margin 0 must reproduce the Dirichlet count exactly
    first = sequence.boxes[0]
    identity = free_ids(cfg, seeds[0], first, energies, 0, config.dense_ceiling)
    reference = counting_ids(cfg, seeds[0], first, energies, config.dense_ceiling)
    scale = config.tolerances.agreement * cfg.mesh_width ** (-cfg.dimension)
    return ExperimentOutcome(
        payloads={
            "ids_free.csv": csv_bytes(["seed", "radius", "energy", "N_dirichlet", "N_free"], rows),
        },
        checks={
            "margin_zero_identity": bool(np.array_equal(identity.values, reference.values)),
            "free_nonnegative": bool(np.all(free >= 0)),
        },
        metrics={
            "margin": margin,
            "flat_gaps": gaps,
            "gaps_shrink": _non_increasing(gaps),
            "largest_box_within_agreement": gaps[-1] <= scale,
        },
    )


@experiment(ExperimentKind.LAPLACE.value)
def laplace(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    sequence = _sequence(config)
    seeds = config.seed_list()
    times = config.grids.times
    margin = _ambient_margin(config, max(times))
    _require_dense(sequence.boxes[-1].enlarged(margin), config)

    runs = ordered_map(
        lambda s: [laplace_transform(cfg, s, box, times, config.dense_ceiling) for box in sequence.boxes],
        seeds,
        config.parallelism,
    )
    rows = [
        (seed, table.radius, t, v, f, b)
        for seed, tables in zip(seeds, runs)
        for table in tables
        for t, v, f, b in zip(table.times, table.values, table.flat_bound, table.bound)
    ]
    fits = trace_gap_control(
        cfg, seeds, sequence, times, margin, config.tolerances.trace_gap, config.dense_ceiling, config.parallelism
    )
    gap_rows = [
        (seed, radius, fit.time, margin, fit.thickness, fit.gaps[k][j], ratio, fit.kappa)
        for fit in fits
        for k, seed in enumerate(seeds)
        for j, (radius, ratio) in enumerate(zip(fit.radii, fit.ratios))
    ]
    tables = [t for tabs in runs for t in tabs]
    return ExperimentOutcome(
        payloads={
            "laplace.csv": csv_bytes(["seed", "radius", "time", "L", "flat_bound", "bound"], rows),
            "trace_gap.csv": csv_bytes(
                ["seed", "radius", "time", "margin", "thickness", "gap", "boundary_ratio", "kappa"], gap_rows
            ),
        },
        checks={
            "uniform_bound": all(t.bound_holds for t in tables),
            "decreasing_in_time": all(bool(np.all(np.diff(t.values) <= 0)) for t in tables),
            "trace_gap_controlled": all(fit.controlled for fit in fits),
        },
        metrics={
            "margin": margin,
            "kappa": {format(fit.time, "g"): fit.kappa for fit in fits},
            "mean_trace_gaps": {format(fit.time, "g"): fit.mean_gaps for fit in fits},
            "trace_gaps_shrink": all(fit.shrinking for fit in fits),
        },
    )


@experiment(ExperimentKind.ABSTRACT.value)
def abstract(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    seeds = config.seed_list()
    period = config.supercell_period or 2 * config.radii[-1] + 1
    common = dict(period=period, dense_ceiling=config.dense_ceiling, workers=config.parallelism)
    energy = abstract_ids(cfg, seeds, config.energy_grid(), kind="energy", **common)
    heat = abstract_ids(cfg, seeds, config.grids.times, kind="time", **common)

    rows = []
    for estimate in (energy, heat):
        errors = estimate.standard_error if estimate.standard_error is not None else np.full(estimate.grid.shape, math.nan)
        rows.extend(
            (estimate.variable, x, v, e) for x, v, e in zip(estimate.grid, estimate.values, errors)
        )

    metrics = {"period": period, "seeds": len(seeds), "mean_cell_volume": energy.volume}
    if period > 1:
        other = abstract_ids(cfg, seeds, config.energy_grid(), kind="energy", cell=(1,) * cfg.dimension, **common)
        metrics["cell_difference"] = float(np.max(np.abs(other.values - energy.values)))

    tolerance = 1e-12 * max(float(heat.values.max()), 1.0)
    return ExperimentOutcome(
        payloads={"abstract.csv": csv_bytes(["variable", "x", "value", "standard_error"], rows)},
        checks={"heat_quotient_decreasing": bool(np.all(np.diff(heat.values) <= tolerance))},
        metrics=metrics,
    )


@experiment(ExperimentKind.NFTB.value)
def nftb(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    box = _box(config, config.radii[0])
    thicknesses = config.grids.thicknesses
    margin = _ambient_margin(config, config.time)
    _require_dense(box.enlarged(margin), config)

    seeds = config.seed_list()
    reports = ordered_map(
        lambda s: nftb_experiment(cfg, s, box, config.time, thicknesses, margin),
        seeds,
        config.parallelism,
    )
    rows = [
        (seed, row.thickness, row.layers, row.core_size, row.sup_difference, row.min_difference)
        for seed, r in zip(seeds, reports)
        for row in r.rows
    ]
    tolerance = config.tolerances.kernel
    return ExperimentOutcome(
        payloads={
            "nftb.csv": csv_bytes(
                ["seed", "thickness", "layers", "core_size", "sup_difference", "min_difference"], rows
            )
        },
        checks={
            "non_increasing": all(
                _non_increasing([row.sup_difference for row in r.rows], tolerance) for r in reports
            ),
            "nonnegative": all(
                row.min_difference >= -tolerance for r in reports for row in r.rows if not row.empty_core
            ),
        },
        metrics={
            "radius": box.radius,
            "margin": margin,
            "strictly_decreasing": all(r.strictly_decreasing for r in reports),
        },
    )


@experiment(ExperimentKind.DECAY.value)
def decay(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    period = config.supercell_period or 2 * config.radii[0] + 1
    window = CellWindow(lo=(0,) * cfg.dimension, hi=(period - 1,) * cfg.dimension)
    times = [t for t in config.grids.times if t >= DEFAULT_MIN_FIT_TIME]
    if not times:
        raise ArgumentError(f"decay fits need a time grid point >= {DEFAULT_MIN_FIT_TIME}")

    def run(seed: int):
        metric = sample_metric(cfg, window, seed, period=period)
        potential = sample_potential(cfg, window, seed, period=period)
        hamiltonian = assemble_supercell(metric, potential, period=period)
        summary = eigendecompose(hamiltonian, config.dense_ceiling)
        fits = [fit_decay(kernel(hamiltonian, t, summary=summary), metric) for t in times]
        at_time = kernel(hamiltonian, config.time, summary=summary)
        return fits, [kernel_moments(at_time, a) for a in MOMENT_EXPONENTS]

    seeds = config.seed_list()
    runs = ordered_map(run, seeds, config.parallelism)
    fit_rows, moment_rows = [], []
    for seed, (fits, moments) in zip(seeds, runs):
        fit_rows.extend(
            (seed, f.time, f.c_hat, f.alpha_hat, f.points, f.mean_gap, f.min_gap, f.passed) for f in fits
        )
        moment_rows.extend((seed, config.time, a, b) for a, b in zip(MOMENT_EXPONENTS, moments))

    moments = np.array([m for _, m in runs])
    spread = (moments.max(axis=0) / moments.min(axis=0)).tolist()
    return ExperimentOutcome(
        payloads={
            "decay.csv": csv_bytes(
                ["seed", "time", "c_hat", "alpha_hat", "points", "mean_gap", "min_gap", "passed"], fit_rows
            ),
            "moments.csv": csv_bytes(["seed", "time", "exponent", "moment"], moment_rows),
        },
        checks={
            "envelope_holds": all(f.min_gap >= -ENVELOPE_ATOL for fits, _ in runs for f in fits),
        },
        metrics={
            "period": period,
            "alpha_positive": all(f.alpha_hat > 0 for fits, _ in runs for f in fits),
            "moment_spread": spread,
        },
    )


@experiment(ExperimentKind.MONOTONICITY.value)
def monotonicity(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    boxes = list(_sequence(config).boxes)
    if len(boxes) == 1:
        boxes.append(boxes[0].enlarged(1))
    unloaded = cfg.model_copy(update={"potential_amplitude": 0.0})
    t = config.time

    def run(seed: int):
        hamiltonians = [build_dirichlet(cfg, seed, b) for b in boxes]
        results = [
            ("domain", box.radius, check_domain_monotonicity(small, large, t))
            for box, small, large in zip(boxes, hamiltonians, hamiltonians[1:])
        ]
        free_potential = build_dirichlet(unloaded, seed, boxes[0])
        results.append(
            ("potential", boxes[0].radius, check_potential_monotonicity(hamiltonians[0], free_potential, t))
        )
        return results

    seeds = config.seed_list()
    runs = ordered_map(run, seeds, config.parallelism)
    rows = [
        (seed, name, radius, r.compared_entries, r.max_excess, r.max_gap, r.passed)
        for seed, results in zip(seeds, runs)
        for name, radius, r in results
    ]
    return ExperimentOutcome(
        payloads={
            "monotonicity.csv": csv_bytes(
                ["seed", "check", "radius", "compared_entries", "max_excess", "max_gap", "passed"], rows
            )
        },
        checks={
            "domain_monotone": all(r.passed for results in runs for n, _, r in results if n == "domain"),
            "potential_monotone": all(r.passed for results in runs for n, _, r in results if n == "potential"),
        },
    )


@experiment(ExperimentKind.ERGODIC.value)
def ergodic(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    sequence = _sequence(config)
    seeds = config.seed_list()
    runs = ordered_map(
        lambda s: [
            ergodic_average(
                cfg, s, observable, sequence, time=config.time, margin=config.margin,
                dense_ceiling=config.dense_ceiling,
            )
            for observable in config.observables
        ],
        seeds,
        config.parallelism,
    )
    tables = [t for run in runs for t in run]
    rows = [
        (t.seed, t.observable, r.radius, r.cardinality, r.average, r.expectation, r.deviation, r.envelope, r.within)
        for t in tables
        for r in t.rows
    ]
    checks = {}
    if "constant" in config.observables:
        checks["constant_exact"] = all(
            r.deviation == 0.0 for t in tables if t.observable == "constant" for r in t.rows
        )
    within = {
        observable: float(np.mean([r.within for t in tables if t.observable == observable for r in t.rows]))
        for observable in config.observables
    }
    return ExperimentOutcome(
        payloads={
            "ergodic.csv": csv_bytes(
                ["seed", "observable", "radius", "cardinality", "average", "expectation",
                 "deviation", "envelope", "within"],
                rows,
            )
        },
        checks=checks,
        metrics={"within_fraction": within},
    )


@experiment("invariants:random-model")
def random_model_invariants(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    box = _box(config, config.radii[-1])
    period = config.supercell_period or 2 * config.radii[0] + 1
    torus = CellWindow(lo=(0,) * cfg.dimension, hi=(period - 1,) * cfg.dimension)
    rows, checks = [], {"metric_bounds": True, "periodic_bounds": True}
    for seed in config.seed_list():
        for name, field in (
            ("metric_bounds", sample_metric(cfg, box.window.enlarged(1), seed)),
            ("periodic_bounds", sample_metric(cfg, torus, seed, period=period)),
        ):
            report = verify_model_bounds(field, cfg)
            checks[name] = checks[name] and report.passed
            rows.append(
                (seed, name, report.c_g_observed, report.c_g, report.c_rho_observed, report.c_rho,
                 report.density_min, report.density_max, report.passed)
            )
    return ExperimentOutcome(
        payloads={
            "model_bounds.csv": csv_bytes(
                ["seed", "field", "c_g_observed", "c_g", "c_rho_observed", "c_rho",
                 "density_min", "density_max", "passed"],
                rows,
            )
        },
        checks=checks,
    )


@experiment("invariants:geometry")
def geometry_invariants(config: ExperimentConfig) -> ExperimentOutcome:
    sequence = _sequence(config)
    unit = (1,) + (0,) * (config.model.dimension - 1)
    defects = [folner_defect(box.index_set(), unit) for box in sequence.boxes]
    ratios = [isoperimetric_ratio(box, 1.0) for box in sequence.boxes]
    description = sequence_description(sequence)
    for row, defect, ratio, box in zip(description, defects, ratios, sequence.boxes):
        row["folner_defect"] = float(defect)
        row["boundary_ratio"] = float(ratio)
        row["boundary_bound"] = isoperimetric_bound(box, 1.0)
    return ExperimentOutcome(
        payloads={"geometry.json": json_bytes({"boxes": description})},
        checks={
            "folner_defect_decreasing": all(b < a for a, b in zip(defects, defects[1:])),
            "boundary_ratio_non_increasing": _non_increasing(ratios),
        },
        metrics={
            "temperedness": float(sequence.temperedness),
            "union_temperedness": float(sequence.union_temperedness),
        },
    )


@experiment("invariants:operators")
def operator_invariants(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    box = _box(config, config.radii[0])
    gamma = (1,) + (0,) * (cfg.dimension - 1)
    flat_cfg = cfg.model_copy(update={"metric_amplitude": 0.0})
    rows = []
    checks = {"equivariance": True, "form_comparability": True}
    for seed in config.seed_list():
        shifted = equivariance_check(cfg, seed, gamma, box)
        form = form_comparability(
            build_dirichlet(flat_cfg, seed, box), build_dirichlet(cfg, seed, box), FORM_TRIALS, cfg, seed=seed
        )
        checks["equivariance"] = checks["equivariance"] and shifted.passed
        checks["form_comparability"] = checks["form_comparability"] and form.passed
        rows.append((seed, "equivariance", shifted.mismatched_entries, 0.0, shifted.passed))
        rows.append((seed, "form_comparability", form.ratio_min, form.ratio_max, form.passed))
    return ExperimentOutcome(
        payloads={"operators.csv": csv_bytes(["seed", "check", "low", "high", "passed"], rows)},
        checks=checks,
    )


@experiment("invariants:spectral")
def spectral_invariants(config: ExperimentConfig) -> ExperimentOutcome:
    cfg = config.model
    box = _box(config, config.radii[0])
    rows = []
    checks = {"inertia_matches_eigenvalues": True, "heat_trace_identity": True, "shift_identity": True}
    for seed in config.seed_list():
        hamiltonian = build_dirichlet(cfg, seed, box)
        summary = eigendecompose(hamiltonian, config.dense_ceiling)
        guard = SPECTRUM_GUARD * max(hamiltonian.norm(), 1.0)
        energies = [
            float(e)
            for e in config.energy_grid()
            if summary.size == 0 or np.min(np.abs(summary.eigenvalues - e)) > guard
        ]
        mismatches = sum(
            int(count_below(hamiltonian, e, config.dense_ceiling) != summary.count_below(e)) for e in energies
        )
        eigen_trace = summary.heat_trace(config.time)
        kernel_trace = heat_trace_hilbert_schmidt(hamiltonian, config.time, dense_ceiling=config.dense_ceiling)
        relative = abs(eigen_trace - kernel_trace) / max(abs(eigen_trace), 1.0)
        shift = shift_identity_check(cfg, seed, box, 1.0, energies or [0.0], config.dense_ceiling)

        checks["inertia_matches_eigenvalues"] &= mismatches == 0
        checks["heat_trace_identity"] &= relative <= HEAT_TRACE_RTOL
        checks["shift_identity"] &= shift.passed
        rows.append((seed, "inertia_mismatches", float(mismatches), 0.0))
        rows.append((seed, "heat_trace", eigen_trace, kernel_trace))
        rows.append((seed, "shift_mismatches", float(shift.mismatches), 0.0))
    return ExperimentOutcome(
        payloads={"spectral.csv": csv_bytes(["seed", "check", "value", "reference"], rows)},
        checks=checks,
    )
