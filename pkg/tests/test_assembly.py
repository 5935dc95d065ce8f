import math

import numpy as np
import pytest
import scipy.sparse as sp

from idslab.exceptions import ArgumentError
from idslab.models.config import ModelConfig
from idslab.models.geometry import CellWindow, FolnerBox
from idslab.models.hamiltonian import BoundaryCondition
from idslab.operators import (
    assemble_dirichlet,
    build_dirichlet,
    build_supercell,
    comparability_constant,
    equivariance_check,
    form_comparability,
    write_coordinate_matrix,
)
from idslab.random_model import sample_metric, sample_potential


def test_path_graph_is_tridiagonal(path_graph):
    expected = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]])

    assert np.array_equal(path_graph.dense(), expected)
    assert path_graph.boundary == BoundaryCondition.DIRICHLET
    assert path_graph.volume == 3.0


def test_path_graph_spectrum(path_graph):
    values = np.linalg.eigvalsh(path_graph.dense())

    assert np.allclose(values, [2 - math.sqrt(2), 2.0, 2 + math.sqrt(2)], atol=1e-12)


def test_four_vertex_torus_spectrum(flat_line):
    torus = build_supercell(flat_line, 0, period=4)

    assert torus.boundary == BoundaryCondition.PERIODIC_SUPERCELL
    assert np.allclose(np.linalg.eigvalsh(torus.dense()), [0.0, 2.0, 2.0, 4.0], atol=1e-12)


def test_two_vertex_torus_merges_parallel_edges(flat_line):
    torus = build_supercell(flat_line, 0, period=2)

    assert np.array_equal(torus.dense(), np.array([[2.0, -2.0], [-2.0, 2.0]]))


def test_disordered_operator_is_symmetric_and_nonnegative(disordered_plane):
    hamiltonian = build_dirichlet(disordered_plane, 3, FolnerBox(dimension=2, radius=2, resolution=2))

    assert (hamiltonian.matrix != hamiltonian.matrix.T).nnz == 0
    assert np.linalg.eigvalsh(hamiltonian.dense()).min() > 0.0


def test_stiffness_pair_reproduces_symmetrized_operator(disordered_plane):
    hamiltonian = build_dirichlet(disordered_plane, 1, FolnerBox(dimension=2, radius=1, resolution=2))

    k, m = hamiltonian.stiffness()
    root = sp.diags(1.0 / np.sqrt(hamiltonian.mu))

    assert np.allclose((root @ k @ root).toarray(), hamiltonian.dense(), atol=1e-12)
    assert np.array_equal(m.diagonal(), hamiltonian.mu)


def test_shifted_operator_raises_the_potential(path_graph):
    raised = path_graph.shifted(1.5)

    assert np.array_equal(raised.dense(), path_graph.dense() + 1.5 * np.eye(3))
    assert raised.volume == path_graph.volume


def test_index_of_rejects_outside_vertices(path_graph):
    assert path_graph.index_of(np.array([[-1], [1]])).tolist() == [0, 2]
    with pytest.raises(IndexError):
        path_graph.index_of(np.array([[5]]))


def test_dirichlet_needs_covering_metric(disordered_plane):
    box = FolnerBox(dimension=2, radius=1, resolution=2)
    metric = sample_metric(disordered_plane, box.window, 0)
    potential = sample_potential(disordered_plane, box.window, 0)

    with pytest.raises(ArgumentError):
        assemble_dirichlet(metric, potential, box)


def test_box_must_match_model(disordered_plane):
    with pytest.raises(ArgumentError):
        build_dirichlet(disordered_plane, 0, FolnerBox(dimension=2, radius=1, resolution=1))


def test_supercell_needs_exactly_one_of_radius_or_period(flat_line):
    with pytest.raises(ArgumentError):
        build_supercell(flat_line, 0)
    with pytest.raises(ArgumentError):
        build_supercell(flat_line, 0, radius=1, period=3)


def test_equivariance_examples(disordered_plane):
    box = FolnerBox(dimension=2, radius=1, resolution=2)

    assert equivariance_check(disordered_plane, 0, (0, 0), box).passed
    flat = ModelConfig(dimension=2, resolution=2, metric_amplitude=0.0, potential_amplitude=0.0)
    assert equivariance_check(flat, 0, (4, -1), box).passed


def test_equivariance_random_pairs(disordered_plane):
    rng = np.random.default_rng(20)
    box = FolnerBox(dimension=2, radius=2, resolution=2)

    for _ in range(20):
        gamma = tuple(int(g) for g in rng.integers(-6, 7, size=2))
        seed = int(rng.integers(0, 2**31))
        report = equivariance_check(disordered_plane, seed, gamma, box)
        assert report.passed, report


def test_shift_argument_samples_the_translated_operator(disordered_plane):
    box = FolnerBox(dimension=2, radius=1, resolution=2)
    gamma = (3, -2)

    sampled = assemble_dirichlet(
        sample_metric(disordered_plane, box.window.enlarged(1), 5, shift=gamma),
        sample_potential(disordered_plane, box.window, 5, shift=gamma),
        box,
    )
    translated = build_dirichlet(disordered_plane, 5, box.translated(gamma))
    report = equivariance_check(disordered_plane, 5, gamma, box)

    assert (sampled.matrix != translated.matrix).nnz == 0
    assert np.array_equal(sampled.mu, translated.mu)
    assert np.array_equal(sampled.potential, translated.potential)
    assert report.passed
    assert report.sampled_shift_mismatches == 0
    assert report.mismatched_entries == 0


def test_form_comparability_flat_is_exact():
    cfg = ModelConfig(dimension=2, resolution=2, metric_amplitude=0.0)
    box = FolnerBox(dimension=2, radius=1, resolution=2)
    hamiltonian = build_dirichlet(cfg, 0, box)

    report = form_comparability(hamiltonian, hamiltonian, 20, cfg)

    assert report.passed
    assert report.ratio_min == pytest.approx(1.0)
    assert report.ratio_max == pytest.approx(1.0)


def test_form_comparability_disordered(disordered_plane):
    box = FolnerBox(dimension=2, radius=2, resolution=2)
    flat = build_dirichlet(disordered_plane.model_copy(update={"metric_amplitude": 0.0}), 4, box)
    disordered = build_dirichlet(disordered_plane, 4, box)
    ground = np.linalg.eigh(flat.dense())[1][:, 0]

    report = form_comparability(flat, disordered, 1000, disordered_plane, seed=4, vectors=ground)

    assert report.passed
    assert report.trials == 1001
    assert report.c_a == comparability_constant(disordered_plane)
    assert 1.0 / report.c_a <= report.ratio_min <= report.ratio_max <= report.c_a


def test_form_comparability_dimension_mismatch(disordered_plane, path_graph):
    hamiltonian = build_dirichlet(disordered_plane, 0, FolnerBox(dimension=2, radius=1, resolution=2))

    with pytest.raises(ArgumentError):
        form_comparability(path_graph, hamiltonian, 5, disordered_plane)


def test_coordinate_matrix_export(tmp_path, path_graph):
    path = write_coordinate_matrix(path_graph, str(tmp_path))

    lines = open(path).read().splitlines()
    assert lines[0] == "3 5"
    assert lines[1] == "0 0 2"
    assert lines[2] == "0 1 -1"
