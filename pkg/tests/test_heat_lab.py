import math

import numpy as np
import pytest

from idslab.exceptions import ArgumentError
from idslab.heat import (
    check_domain_monotonicity,
    check_potential_monotonicity,
    fit_decay,
    kernel,
    kernel_moments,
    margin_self_consistency,
    metric_distances,
    nftb_experiment,
    required_thickness,
)
from idslab.models.config import ModelConfig
from idslab.models.geometry import CellWindow, FolnerBox
from idslab.models.heat import DecayFit
from idslab.operators import assemble_supercell, build_dirichlet
from idslab.random_model import sample_metric, sample_potential


def _torus(cfg: ModelConfig, seed: int, period: int):
    window = CellWindow(lo=(0,) * cfg.dimension, hi=(period - 1,) * cfg.dimension)
    metric = sample_metric(cfg, window, seed, period=period)
    potential = sample_potential(cfg, window, seed, period=period)
    return assemble_supercell(metric, potential, period=period), metric


def test_one_vertex_kernel(flat_line):
    hamiltonian = build_dirichlet(flat_line, 0, FolnerBox(dimension=1, radius=0))

    km = kernel(hamiltonian, 0.7)

    assert km.entries[0, 0] == pytest.approx(math.exp(-2.0 * 0.7) / hamiltonian.mu[0], rel=1e-12)
    assert km.sup_entry == km.entries[0, 0]


def test_kernel_is_symmetric_and_nonnegative(disordered_plane):
    hamiltonian = build_dirichlet(disordered_plane, 2, FolnerBox(dimension=2, radius=1, resolution=2))

    km = kernel(hamiltonian, 1.0)

    assert np.array_equal(km.entries, km.entries.T)
    assert km.entries.min() >= 0.0
    assert km.row_integral_sup <= 1.0 + 1e-12


def test_domain_monotonicity_equal_domains(path_graph):
    report = check_domain_monotonicity(path_graph, path_graph, 1.0)

    assert report.passed
    assert report.max_excess == 0.0


def test_domain_monotonicity_path_graphs(flat_line, path_graph):
    large = build_dirichlet(flat_line, 0, FolnerBox(dimension=1, radius=2))

    report = check_domain_monotonicity(path_graph, large, 1.0)

    assert report.passed
    assert report.compared_entries == 9
    assert report.max_gap > 0.0
    assert report.max_excess < 0.0


def test_domain_monotonicity_random_nested_boxes(disordered_plane):
    rng = np.random.default_rng(3)
    for _ in range(6):
        seed = int(rng.integers(0, 2**31))
        center = tuple(int(c) for c in rng.integers(-5, 6, size=2))
        inner = FolnerBox(dimension=2, radius=1, resolution=2, center=center)
        small = build_dirichlet(disordered_plane, seed, inner)
        large = build_dirichlet(disordered_plane, seed, inner.enlarged(int(rng.integers(1, 3))))
        assert check_domain_monotonicity(small, large, float(rng.uniform(0.2, 2.0))).passed


def test_domain_monotonicity_rejects_non_nested(flat_line, path_graph):
    elsewhere = build_dirichlet(flat_line, 0, FolnerBox(dimension=1, radius=1, center=(10,)))

    with pytest.raises(ArgumentError):
        check_domain_monotonicity(path_graph, elsewhere, 1.0)


def test_potential_monotonicity_constant_shift(path_graph):
    raised = path_graph.shifted(0.5)

    report = check_potential_monotonicity(raised, path_graph, 2.0)

    assert report.passed
    assert np.allclose(kernel(raised, 2.0).entries, math.exp(-1.0) * kernel(path_graph, 2.0).entries, atol=1e-14)
    assert check_potential_monotonicity(path_graph, path_graph, 2.0).max_excess == 0.0


def test_potential_monotonicity_random_potentials(disordered_plane):
    unloaded = disordered_plane.model_copy(update={"potential_amplitude": 0.0})
    box = FolnerBox(dimension=2, radius=1, resolution=2)
    for seed in range(5):
        loaded = build_dirichlet(disordered_plane, seed, box)
        free = build_dirichlet(unloaded, seed, box)
        assert check_potential_monotonicity(loaded, free, 1.0).passed


def test_potential_monotonicity_rejects_wrong_order(path_graph):
    with pytest.raises(ArgumentError):
        check_potential_monotonicity(path_graph, path_graph.shifted(1.0), 1.0)


def test_nftb_decreases_with_thickness(flat_line):
    box = FolnerBox(dimension=1, radius=16)

    report = nftb_experiment(flat_line, 0, box, 1.0, [1.0, 2.0, 4.0, 8.0])

    sups = [row.sup_difference for row in report.rows]
    assert report.strictly_decreasing
    assert sups[-1] <= 1e-6 * sups[0]
    assert all(row.min_difference >= -1e-12 for row in report.rows)


def test_nftb_empty_core_reports_zero(flat_line):
    report = nftb_experiment(flat_line, 0, FolnerBox(dimension=1, radius=2), 0.5, [1.0, 5.0])

    assert report.rows[-1].empty_core
    assert report.rows[-1].sup_difference == 0.0
    assert report.non_increasing


def test_nftb_rejects_small_margin(flat_line):
    with pytest.raises(ArgumentError):
        nftb_experiment(flat_line, 0, FolnerBox(dimension=1, radius=4), 1.0, [2.0], margin=1)


def test_margin_self_consistency(flat_line):
    report = margin_self_consistency(flat_line, 0, FolnerBox(dimension=1, radius=4), 0.5, 8)

    assert report.passed
    assert report.doubled_margin == 16


def test_metric_distances_flat_torus(flat_line):
    hamiltonian, metric = _torus(flat_line, 0, 12)

    distances = metric_distances(hamiltonian, metric)

    assert distances[0, 6] == 6.0
    assert distances[0, 11] == 1.0
    assert np.array_equal(distances, distances.T)


def test_decay_fit_on_flat_torus(flat_line):
    hamiltonian, metric = _torus(flat_line, 0, 12)

    fits = [fit_decay(kernel(hamiltonian, t), metric) for t in (0.5, 1.0, 2.0)]

    assert all(f.passed for f in fits)
    assert all(f.min_gap >= -1e-9 for f in fits)
    assert fits[0].alpha_hat > fits[1].alpha_hat > fits[2].alpha_hat > 0


def test_decay_fit_preconditions(flat_line):
    hamiltonian, metric = _torus(flat_line, 0, 12)

    with pytest.raises(ArgumentError):
        fit_decay(kernel(hamiltonian, 0.1), metric)
    small, small_metric = _torus(flat_line, 0, 4)
    with pytest.raises(ArgumentError):
        fit_decay(kernel(small, 1.0), small_metric)


def test_kernel_moments_conserve_mass_on_torus(flat_line):
    hamiltonian, _ = _torus(flat_line, 0, 12)

    km = kernel(hamiltonian, 1.0)

    assert kernel_moments(km, 1.0) == pytest.approx(1.0, rel=1e-12)
    assert kernel_moments(km, 2.0) < kernel_moments(km, 1.0) < kernel_moments(km, 0.5)
    with pytest.raises(ArgumentError):
        kernel_moments(km, 0.0)


def test_required_thickness():
    fit = DecayFit(time=1.0, c_hat=2.0, alpha_hat=0.5, points=10, mean_gap=0.1, min_gap=0.0, passed=True)

    thickness = required_thickness(fit, 1.0, 1e-3)

    assert 2.0 * math.exp(-0.5 * (thickness / 2) ** 2) == pytest.approx(1e-3)
    assert required_thickness(fit, 1.0, 5.0) == 0.0
