from fractions import Fraction

import numpy as np
import pytest

from idslab.exceptions import ArgumentError
from idslab.geometry import (
    boundary_layers,
    folner_defect,
    isoperimetric_bound,
    isoperimetric_ratio,
    make_admissible_sequence,
    sumset_size,
    tempered_union_ratio,
    thicken,
)
from idslab.models.geometry import FolnerBox


def test_sumset_ratio_of_two_intervals():
    sequence = make_admissible_sequence(1, [1, 2])

    assert sequence.sumset_sizes == [7]
    assert sequence.temperedness_ratios == [Fraction(7, 5)]


def test_single_radius_is_trivially_tempered():
    sequence = make_admissible_sequence(3, [2])

    assert sequence.temperedness == 0
    assert sequence.union_temperedness == 0


def test_doubling_boxes_stay_below_two_to_the_d():
    sequence = make_admissible_sequence(2, [2, 4, 8])

    assert all(r <= 4 for r in sequence.temperedness_ratios)
    assert sequence.union_temperedness <= 4


@pytest.mark.parametrize("radii", [[], [2, 2], [3, 1], [-1, 2]])
def test_invalid_radii_are_rejected(radii):
    with pytest.raises(ArgumentError):
        make_admissible_sequence(2, radii)


def test_sumset_matches_brute_force():
    left = np.array([[0, 0], [1, 0], [3, 2]])
    right = np.array([[0, 1], [2, 2]])

    brute = {tuple(a - b) for a in left for b in right}

    assert sumset_size(left, right) == len(brute)


def test_tempered_union_ratio_of_nested_boxes():
    boxes = [FolnerBox(dimension=1, radius=r) for r in (1, 2)]

    assert tempered_union_ratio(boxes) == Fraction(7, 5)


def test_folner_defect_examples():
    box = FolnerBox(dimension=1, radius=10)

    assert folner_defect(box.index_set(), (0,)) == 0
    assert folner_defect(box.index_set(), (1,)) == Fraction(2, 21)


def test_folner_defect_decreases_along_boxes():
    defects = [folner_defect(FolnerBox(dimension=2, radius=r).index_set(), (0, 1)) for r in (2, 4, 8)]

    assert defects[0] > defects[1] > defects[2]


def test_boundary_ring_ratio():
    assert isoperimetric_ratio(FolnerBox(dimension=2, radius=10), 1.0) == Fraction(80, 441)


def test_ratio_decreases_and_respects_box_bound():
    ratios = []
    for radius in (4, 8, 16):
        box = FolnerBox(dimension=2, radius=radius)
        ratio = isoperimetric_ratio(box, 1.0)
        assert float(ratio) <= isoperimetric_bound(box, 1.0)
        ratios.append(ratio)

    assert ratios[0] > ratios[1] > ratios[2]


def test_thick_layer_covers_the_box():
    box = FolnerBox(dimension=2, radius=2)

    assert isoperimetric_ratio(box, 10.0) == 1
    assert thicken(box, 10.0).core_size == 0


def test_thin_layer_is_outermost_vertices():
    box = FolnerBox(dimension=2, radius=3, resolution=2)

    layer = thicken(box, 1e-6)

    assert layer.layers == 1
    expected = np.zeros(box.vertex_shape(), dtype=bool)
    expected[0, :] = expected[-1, :] = expected[:, 0] = expected[:, -1] = True
    assert np.array_equal(layer.boundary_mask, expected)


def test_core_of_short_interval():
    layer = thicken(FolnerBox(dimension=1, radius=3), 1.0)

    assert layer.core_coordinates().ravel().tolist() == [-2, -1, 0, 1, 2]


def test_partition_is_complementary():
    box = FolnerBox(dimension=3, radius=2, resolution=2, center=(1, -1, 0))

    layer = thicken(box, 0.75)

    assert not np.any(layer.boundary_mask & layer.core_mask)
    assert layer.core_size + layer.boundary_size == box.vertex_count


def test_boundary_layers_rounding():
    assert boundary_layers(1.0, 3) == 3
    assert boundary_layers(0.1 * 3, 10) == 3
    assert boundary_layers(1e-9, 4) == 1


def test_nonpositive_thickness_is_rejected():
    with pytest.raises(ArgumentError):
        thicken(FolnerBox(dimension=1, radius=2), 0.0)
