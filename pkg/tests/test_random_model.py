import math

import numpy as np
import pytest

from idslab.exceptions import ArgumentError, ResourceLimitError
from idslab.models.config import BumpProfile, ModelConfig
from idslab.models.geometry import CellWindow
from idslab.random_model import (
    cell_amplitudes,
    cell_potentials,
    sample_metric,
    sample_potential,
    shift_realization,
    verify_model_bounds,
    write_field_columns,
)
from idslab.random_model.bumps import axis_weights, cubic_bspline
from idslab.random_model.counter_hash import derive_key, hash_uniform

WINDOW = CellWindow(lo=(-2, -2), hi=(2, 2))


def test_hash_uniform_is_pointwise_and_in_range():
    key = derive_key(7, "metric")
    cells = np.array([[0, 0], [1, -3], [5, 2]])

    values = hash_uniform(key, cells)

    assert np.all((values >= 0.0) & (values < 1.0))
    assert values[1] == hash_uniform(key, cells[1:2])[0]
    assert hash_uniform(key, np.array([[7, 0]]), period=5)[0] == hash_uniform(key, np.array([[2, 0]]))[0]


def test_metric_and_potential_streams_differ():
    cells = np.array([[0, 0]])

    assert hash_uniform(derive_key(3, "metric"), cells)[0] != hash_uniform(derive_key(3, "potential"), cells)[0]


def test_bspline_partition_of_unity():
    frac = np.linspace(0.0, 0.95, 20)

    _, weights = axis_weights(BumpProfile.BSPLINE, frac)

    assert np.allclose(weights.sum(axis=1), 1.0, atol=1e-14)
    assert cubic_bspline(np.array([2.0, -2.5]))[0] == 0.0


def test_flat_metric_is_the_lattice():
    cfg = ModelConfig(dimension=2, resolution=2, metric_amplitude=0.0)

    field = sample_metric(cfg, WINDOW, seed=11)

    assert np.all(field.rho == 1.0)
    assert np.all(field.mu == 0.25)
    assert all(np.all(w == 1.0) for w in field.conductance)


def test_sampling_is_deterministic(disordered_plane):
    a = sample_metric(disordered_plane, WINDOW, seed=5)
    b = sample_metric(disordered_plane, WINDOW, seed=5)

    assert np.array_equal(a.rho, b.rho)
    assert np.array_equal(a.mu, b.mu)
    assert all(np.array_equal(x, y) for x, y in zip(a.conductance, b.conductance))


def test_indicator_single_cell_density():
    cfg = ModelConfig(dimension=2, resolution=1, metric_amplitude=0.3, bump=BumpProfile.INDICATOR)

    field = sample_metric(cfg, CellWindow(lo=(0, 0), hi=(0, 0)), seed=3)
    a0 = float(cell_amplitudes(cfg, 3, np.zeros((1, 2), dtype=np.int64))[0])

    assert field.rho[0, 0] == pytest.approx(math.exp(-2 * a0), rel=1e-14)
    assert math.exp(-0.6) <= field.rho[0, 0] <= math.exp(0.6)
    assert field.amplitudes[0, 0] == a0


def test_potential_examples():
    cfg = ModelConfig(dimension=1, resolution=1, potential_amplitude=1.0, bump=BumpProfile.INDICATOR)
    field = sample_potential(cfg, CellWindow(lo=(0,), hi=(0,)), seed=3)
    q0 = float(cell_potentials(cfg, 3, np.zeros((1, 1), dtype=np.int64))[0])

    assert field.values[0] == q0
    assert 0.0 <= q0 < 1.0

    zero = sample_potential(cfg.model_copy(update={"potential_amplitude": 0.0}), CellWindow(lo=(0,), hi=(4,)), seed=3)
    assert np.all(zero.values == 0.0)


def test_potential_is_nonnegative(disordered_plane):
    field = sample_potential(disordered_plane, WINDOW, seed=2)

    assert field.values.min() >= 0.0


def test_shifted_sample_matches_translated_window(disordered_plane):
    gamma = (1, -2)

    shifted = sample_metric(disordered_plane, WINDOW, seed=4, shift=gamma)
    moved = sample_metric(disordered_plane, WINDOW.translated(gamma), seed=4)

    assert np.array_equal(shifted.rho, moved.rho)
    assert all(np.array_equal(x, y) for x, y in zip(shifted.conductance, moved.conductance))


def test_shift_then_unshift_is_identity(disordered_plane):
    field = sample_metric(disordered_plane, WINDOW, seed=9)

    back = shift_realization(shift_realization(field, (3, -2)), (-3, 2))
    same = shift_realization(field, (0, 0))

    assert back.window == field.window
    assert back.shift == field.shift
    assert np.array_equal(back.rho, field.rho)
    assert same.window == field.window


def test_window_beyond_extent_is_rejected():
    cfg = ModelConfig(dimension=1, resolution=1, max_extent=10)

    with pytest.raises(ResourceLimitError) as info:
        sample_metric(cfg, CellWindow(lo=(0,), hi=(11,)), seed=0)
    assert info.value.ceiling == "max_extent"


def test_dimension_mismatch_is_rejected(disordered_plane):
    with pytest.raises(ArgumentError):
        sample_metric(disordered_plane, CellWindow(lo=(0,), hi=(1,)), seed=0)


def test_model_bounds_scan(disordered_plane):
    field = sample_metric(disordered_plane, WINDOW, seed=1)

    report = verify_model_bounds(field)

    assert report.passed
    assert report.c_g_observed <= math.exp(0.6)

    rho = field.rho.copy()
    rho[0, 0] = 2.0 * disordered_plane.c_g
    assert not verify_model_bounds(field.model_copy(update={"rho": rho})).passed


def test_flat_bounds_are_exact():
    cfg = ModelConfig(dimension=2, resolution=2, metric_amplitude=0.0)

    report = verify_model_bounds(sample_metric(cfg, WINDOW, seed=0))

    assert report.c_g_observed == 1.0
    assert report.passed


def test_periodic_bounds_include_wrap_edges(disordered_plane):
    window = CellWindow(lo=(0, 0), hi=(4, 4))

    field = sample_metric(disordered_plane, window, seed=6, period=5)

    assert verify_model_bounds(field).passed


def test_write_field_columns(tmp_path, disordered_plane):
    field = sample_metric(disordered_plane, CellWindow(lo=(0, 0), hi=(1, 1)), seed=0)

    vertices, edges = write_field_columns(field, str(tmp_path))

    lines = open(vertices).read().splitlines()
    assert lines[0].startswith("vertex,")
    assert len(lines) == 1 + field.rho.size
    assert len(open(edges).read().splitlines()) == 1 + sum(c.size for c in field.conductance)
