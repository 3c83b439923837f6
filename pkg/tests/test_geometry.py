import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from absplace import Box3, DomainError, Point3, RegularGrid3, Segment3, containing_voxel, grid_point


def unit_grid(dims=(4, 4, 4)):
    return RegularGrid3(Point3(0, 0, 0), (1.0, 1.0, 1.0), dims)


class TestGridPoint:
    def test_identity_case(self):
        g = unit_grid()
        assert grid_point(g, (0, 0, 0)) == Point3(0, 0, 0)

    def test_single_step(self):
        g = RegularGrid3(Point3(0, 0, 0), (2.0, 3.0, 4.0), (2, 2, 2))
        assert grid_point(g, (1, 1, 1)) == Point3(2, 3, 4)

    def test_offset_origin(self):
        g = RegularGrid3(Point3(10, 0, 50), (5.0, 5.0, 10.0), (3, 3, 3))
        assert grid_point(g, (2, 0, 1)) == Point3(20, 0, 60)

    def test_out_of_bounds(self):
        with pytest.raises(IndexError):
            grid_point(unit_grid(), (4, 0, 0))
        with pytest.raises(IndexError):
            grid_point(unit_grid(), (0, -1, 0))


class TestContainingVoxel:
    def test_nearest_point(self):
        assert containing_voxel(unit_grid(), Point3(0.4, 0.4, 0.4)) == (0, 0, 0)

    def test_rounding(self):
        assert containing_voxel(unit_grid(), Point3(0.6, 0, 0)) == (1, 0, 0)

    def test_nonunit_spacing(self):
        g = RegularGrid3(Point3(0, 0, 0), (2.0, 2.0, 2.0), (3, 3, 3))
        # round(p / spacing) = round((1.45, 0.45, 0)) componentwise
        assert containing_voxel(g, Point3(2.9, 0.9, 0)) == (1, 0, 0)

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            containing_voxel(unit_grid(), Point3(4.0, 0, 0))

    def test_outer_faces_stay_in_range(self):
        g = unit_grid()
        lo, hi = g.domain_bounds()
        assert containing_voxel(g, Point3(*lo)) == (0, 0, 0)
        assert containing_voxel(g, Point3(*hi)) == (3, 3, 3)


@given(
    st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 3)),
    st.tuples(
        st.floats(0.1, 7.0), st.floats(0.1, 7.0), st.floats(0.1, 7.0)
    ),
)
@settings(max_examples=60, deadline=None)
def test_round_trip_on_grid_points(index, spacing):
    g = RegularGrid3(Point3(-3.0, 2.0, 0.5), spacing, (5, 5, 4))
    assert containing_voxel(g, grid_point(g, index)) == index


@given(
    st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 3)),
    st.tuples(st.floats(-0.49, 0.49), st.floats(-0.49, 0.49), st.floats(-0.49, 0.49)),
)
@settings(max_examples=60, deadline=None)
def test_perturbation_within_half_voxel(index, eps):
    g = RegularGrid3(Point3(0, 0, 0), (1.0, 2.0, 0.5), (5, 5, 4))
    p = grid_point(g, index)
    q = Point3(p.x + eps[0] * 1.0, p.y + eps[1] * 2.0, p.z + eps[2] * 0.5)
    assert containing_voxel(g, q) == index


def test_point_validation():
    with pytest.raises(ValueError):
        Point3(float("nan"), 0, 0)
    with pytest.raises(ValueError):
        Point3(0, float("inf"), 0)


def test_grid_validation():
    with pytest.raises(ValueError):
        RegularGrid3(Point3(0, 0, 0), (1.0, 0.0, 1.0), (2, 2, 2))
    with pytest.raises(ValueError):
        RegularGrid3(Point3(0, 0, 0), (1.0, 1.0, 1.0), (2, 0, 2))


def test_points_array_order_and_count():
    g = RegularGrid3(Point3(0, 0, 0), (1.0, 1.0, 1.0), (2, 3, 2))
    pts = g.points_array()
    assert pts.shape == (g.num_points, 3)
    # x-major: the z coordinate varies fastest
    np.testing.assert_allclose(pts[0], [0, 0, 0])
    np.testing.assert_allclose(pts[1], [0, 0, 1])
    np.testing.assert_allclose(pts[2], [0, 1, 0])
    np.testing.assert_allclose(pts[-1], [1, 2, 1])


def test_box_contains_and_validation():
    box = Box3(Point3(0, 0, 0), Point3(2, 2, 2))
    assert box.contains(Point3(1, 2, 0))
    assert not box.contains(Point3(1, 2.1, 0))
    assert box.contains_xy(1.0, 1.0)
    with pytest.raises(ValueError):
        Box3(Point3(1, 0, 0), Point3(0, 1, 1))


def test_segment_length_and_degenerate():
    seg = Segment3(Point3(0, 0, 0), Point3(3, 4, 0))
    assert seg.length == 5.0
    assert not seg.is_degenerate()
    assert Segment3(Point3(1, 1, 1), Point3(1, 1, 1)).is_degenerate()
    mid = seg.point_at(0.5)
    assert math.isclose(mid.x, 1.5) and math.isclose(mid.y, 2.0)
