import math

import numpy as np
import pytest
import scipy.linalg as la

from idslab.exceptions import ArgumentError, ResourceLimitError
from idslab.models.config import ModelConfig
from idslab.models.geometry import FolnerBox
from idslab.models.spectral import heat, projection
from idslab.operators import build_dirichlet, build_supercell
from idslab.spectral import (
    count_below,
    eigendecompose,
    heat_operator,
    heat_trace_hilbert_schmidt,
    inertia,
    inertia_report,
    lowest_eigenvalue,
    restricted_trace,
)
from idslab.spectral.inertia import dense_inertia

PATH_EIGENVALUES = [2 - math.sqrt(2), 2.0, 2 + math.sqrt(2)]


@pytest.fixture
def disordered_box(disordered_plane):
    return build_dirichlet(disordered_plane, 7, FolnerBox(dimension=2, radius=2, resolution=2))


def test_eigendecompose_path_graph(path_graph):
    summary = eigendecompose(path_graph)

    assert np.allclose(summary.eigenvalues, PATH_EIGENVALUES, atol=1e-12)
    assert summary.volume == 3.0
    assert summary.max_residual < 1e-12


def test_eigendecompose_over_ceiling(path_graph):
    with pytest.raises(ResourceLimitError) as info:
        eigendecompose(path_graph, dense_ceiling=2)
    assert info.value.ceiling == "dense_ceiling"


def test_dense_inertia_of_diagonal_matrix():
    negative, zero, positive, _ = dense_inertia(np.diag([-3.0, 0.0, 1.0, 2.0]))

    assert (negative, zero, positive) == (1, 1, 2)


def test_count_below_examples(path_graph):
    assert count_below(path_graph, 2.0) == 1
    assert count_below(path_graph, 0.0) == 0
    assert count_below(path_graph, -4.0) == 0
    assert count_below(path_graph, path_graph.norm() + 1.0) == 3


def test_count_at_eigenvalue_is_flagged(path_graph):
    report = inertia_report(path_graph, 2.0)

    assert report.near_boundary
    assert report.negative == 1


def test_sparse_and_dense_inertia_agree(disordered_box):
    values = eigendecompose(disordered_box, vectors=False).eigenvalues
    energies = 0.5 * (values[:-1] + values[1:])[::5]

    for energy in energies:
        dense = inertia(disordered_box, float(energy))
        sparse = inertia(disordered_box, float(energy), dense_ceiling=1)
        assert sparse.method == "sparse-lu"
        assert dense.negative == sparse.negative == int(np.searchsorted(values, energy))


def test_non_finite_energy_is_rejected(path_graph):
    with pytest.raises(ArgumentError):
        inertia(path_graph, math.inf)


def test_lowest_eigenvalue_by_bisection(disordered_box):
    dense = lowest_eigenvalue(disordered_box)
    bisected = lowest_eigenvalue(disordered_box, dense_ceiling=1)

    assert bisected == pytest.approx(dense, abs=1e-7)


def test_heat_operator_examples(path_graph, flat_line):
    assert np.array_equal(heat_operator(path_graph, 0.0).matrix, np.eye(3))
    with pytest.raises(ArgumentError):
        heat_operator(path_graph, -1.0)

    single = build_dirichlet(flat_line, 0, FolnerBox(dimension=1, radius=0))
    assert heat_operator(single, 1.0).matrix[0, 0] == pytest.approx(math.exp(-2.0), rel=1e-14)


def test_eigh_and_expm_agree(disordered_box):
    by_eigh = heat_operator(disordered_box, 0.8, method="eigh")
    by_expm = heat_operator(disordered_box, 0.8, method="expm")

    assert by_eigh.method == "eigh"
    assert by_expm.method == "expm"
    assert np.allclose(by_eigh.matrix, by_expm.matrix, atol=1e-12)
    assert np.array_equal(by_eigh.matrix, by_eigh.matrix.T)


def test_restricted_trace_examples(path_graph):
    middle = np.array([False, True, False])

    assert restricted_trace(path_graph, middle, heat(1.0)) == pytest.approx(0.2948, abs=1e-4)
    assert restricted_trace(path_graph, np.ones(3, dtype=bool), projection(2.5)) == count_below(path_graph, 2.5)
    assert restricted_trace(path_graph, np.zeros(0, dtype=np.int64), heat(1.0)) == 0.0


def test_restricted_trace_accepts_coordinates(path_graph):
    by_coords = restricted_trace(path_graph, np.array([[0]]), heat(1.0))
    by_index = restricted_trace(path_graph, np.array([1]), heat(1.0))

    assert by_coords == by_index


def test_restricted_trace_rejects_outside_region(path_graph):
    with pytest.raises(ArgumentError):
        restricted_trace(path_graph, np.array([[7]]), heat(1.0))
    with pytest.raises(ArgumentError):
        restricted_trace(path_graph, np.array([3]), heat(1.0))


def test_heat_trace_identity(disordered_box):
    summary = eigendecompose(disordered_box)

    for t in (0.1, 1.0, 3.0):
        assert heat_trace_hilbert_schmidt(disordered_box, t) == pytest.approx(summary.heat_trace(t), rel=1e-10)


def test_torus_heat_trace_on_one_vertex(flat_line):
    torus = build_supercell(flat_line, 0, period=4)

    value = restricted_trace(torus, np.array([0]), heat(1.0))

    assert value == pytest.approx(0.25 * (1 + 2 * math.exp(-2.0) + math.exp(-4.0)), rel=1e-12)


def test_sparse_zero_pivot_falls_back_to_bunch_kaufman():
    cfg = ModelConfig(dimension=1, resolution=4, metric_amplitude=0.0, potential_amplitude=0.0)
    hamiltonian = build_dirichlet(cfg, 0, FolnerBox(dimension=1, radius=0, resolution=4))
    # H - 32 I has a zero diagonal but is invertible: 16 (2 - 2 cos(k pi / 5)) != 32
    assert np.array_equal(np.diag(hamiltonian.dense()), np.full(4, 32.0))

    result = inertia(hamiltonian, 32.0, dense_ceiling=1)

    assert result.method == "dense-fallback"
    assert (result.negative, result.zero, result.positive) == (2, 0, 2)
    assert not result.near_boundary


def test_sparse_count_at_eigenvalue_falls_back(path_graph):
    result = inertia(path_graph, 2.0, dense_ceiling=1)

    assert result.method == "dense-fallback"
    assert result.negative == 1
    assert result.near_boundary


def test_generalized_stiffness_spectrum_matches(disordered_box):
    k, m = disordered_box.stiffness()

    generalized = la.eigh(k.toarray(), m.toarray(), eigvals_only=True)
    symmetric = eigendecompose(disordered_box, vectors=False).eigenvalues

    assert disordered_box.dimension <= 200
    assert np.max(np.abs(generalized - symmetric)) <= 1e-10 * np.max(np.abs(symmetric))


def test_dirichlet_eigenvalues_rise_on_smaller_domains(disordered_plane):
    small = build_dirichlet(disordered_plane, 11, FolnerBox(dimension=2, radius=1, resolution=2))
    large = build_dirichlet(disordered_plane, 11, FolnerBox(dimension=2, radius=2, resolution=2))

    inner = eigendecompose(small, vectors=False).eigenvalues
    outer = eigendecompose(large, vectors=False).eigenvalues[: inner.size]

    assert np.all(inner >= outer - 1e-10)
    assert inner[0] > outer[0]
