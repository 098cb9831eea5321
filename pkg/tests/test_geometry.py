import math

import numpy as np
import pytest

from cornerbox.errors import NonFinite, NotARectangle
from cornerbox.geometry import (
    Box3D,
    BoxBEV,
    Corner,
    CornerSet,
    PointCloud,
    bev_iou,
    box_from_corners,
    canonicalize_yaw,
    corners_from_box,
    intersection_area,
    iou3d,
    yaw_distance,
)

from conftest import random_bev, random_box3d
from oracles import raster_bev_iou, raster_iou3d


class TestCanonicalizeYaw:
    def test_three_pi_maps_to_pi(self):
        assert canonicalize_yaw(3 * math.pi) == pytest.approx(math.pi, abs=1e-12)

    def test_minus_pi_maps_to_plus_pi(self):
        assert canonicalize_yaw(-math.pi) == math.pi

    def test_fixed_point(self):
        assert canonicalize_yaw(0.3) == 0.3

    def test_idempotent(self, rng):
        for theta in rng.uniform(-50, 50, size=200):
            once = canonicalize_yaw(theta)
            assert canonicalize_yaw(once) == once
            assert -math.pi < once <= math.pi

    def test_equivalent_mod_two_pi(self, rng):
        for theta in rng.uniform(-50, 50, size=200):
            assert yaw_distance(canonicalize_yaw(theta), theta) < 1e-9

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite(self, bad):
        with pytest.raises(NonFinite):
            canonicalize_yaw(bad)


class TestBoxInvariants:
    def test_positive_sizes_enforced(self):
        with pytest.raises(ValueError):
            BoxBEV(0, 0, -1.0, 2.0, 0.0)
        with pytest.raises(ValueError):
            BoxBEV(0, 0, 1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            Box3D(0, 0, 0, 1, 1, -0.5, 0)

    def test_yaw_canonicalized_on_construction(self):
        assert BoxBEV(0, 0, 1, 1, 3 * math.pi).theta == pytest.approx(math.pi)

    def test_non_finite_rejected(self):
        with pytest.raises(NonFinite):
            BoxBEV(math.nan, 0, 1, 1, 0)


class TestCorners:
    def test_axis_aligned_example(self):
        cs = corners_from_box(BoxBEV(10, 5, 4, 2, 0))
        expected = {0: (12, 6), 1: (12, 4), 2: (8, 4), 3: (8, 6)}
        for n, (ex, ey) in expected.items():
            c = cs.by_index(n)
            assert (c.x, c.y) == pytest.approx((ex, ey), abs=1e-12)
            assert c.visible
            assert c.z_g == 0.0

    def test_quarter_turn_example(self):
        cs = corners_from_box(BoxBEV(0, 0, 2, 2, math.pi / 2))
        expected = {0: (-1, 1), 1: (1, 1), 2: (1, -1), 3: (-1, -1)}
        for n, (ex, ey) in expected.items():
            c = cs.by_index(n)
            assert (c.x, c.y) == pytest.approx((ex, ey), abs=1e-12)

    def test_round_trip_property(self, rng):
        for _ in range(1000):
            box = random_bev(rng)
            back = box_from_corners(corners_from_box(box))
            assert back.x == pytest.approx(box.x, abs=1e-9)
            assert back.y == pytest.approx(box.y, abs=1e-9)
            assert back.l == pytest.approx(box.l, abs=1e-9)
            assert back.w == pytest.approx(box.w, abs=1e-9)
            assert yaw_distance(back.theta, box.theta) < 1e-9

    def test_inverse_example(self):
        cs = CornerSet((
            Corner(0, 12, 6), Corner(1, 12, 4), Corner(2, 8, 4), Corner(3, 8, 6),
        ))
        box = box_from_corners(cs)
        assert (box.x, box.y, box.l, box.w, box.theta) == pytest.approx(
            (10, 5, 4, 2, 0), abs=1e-12)

    def test_collocated_corners_rejected(self):
        cs = CornerSet(tuple(Corner(n, 0.0, 0.0) for n in range(4)))
        with pytest.raises(NotARectangle):
            box_from_corners(cs)

    def test_perturbed_corner_rejected(self):
        cs = CornerSet((
            Corner(0, 12.1, 6), Corner(1, 12, 4), Corner(2, 8, 4), Corner(3, 8, 6),
        ))
        with pytest.raises(NotARectangle):
            box_from_corners(cs)

    def test_corner_set_requires_permutation(self):
        with pytest.raises(ValueError):
            CornerSet((Corner(0, 0, 0), Corner(0, 1, 1),
                       Corner(2, 2, 2), Corner(3, 3, 3)))


class TestBevIou:
    def test_identical_is_exactly_one(self, rng):
        for _ in range(50):
            box = random_bev(rng)
            assert bev_iou(box, box) == 1.0

    def test_disjoint_is_zero(self):
        a = BoxBEV(0, 0, 4, 2, 0.3)
        b = BoxBEV(100, 0, 4, 2, 1.0)
        assert bev_iou(a, b) == 0.0

    def test_unit_squares_at_45_degrees(self):
        a = BoxBEV(0, 0, 1, 1, 0)
        b = BoxBEV(0, 0, 1, 1, math.pi / 4)
        assert bev_iou(a, b) == pytest.approx(math.sqrt(2) / 2, abs=1e-9)
        assert intersection_area(a, b) == pytest.approx(2 * math.sqrt(2) - 2,
                                                        abs=1e-9)

    def test_contained_box(self):
        outer = BoxBEV(0, 0, 4, 4, 0.7)
        inner = BoxBEV(0, 0, 2, 2, 0.7)
        assert bev_iou(outer, inner) == pytest.approx(4.0 / 16.0, abs=1e-12)

    def test_touching_edges_count_zero(self):
        a = BoxBEV(0, 0, 2, 2, 0)
        b = BoxBEV(2, 0, 2, 2, 0)
        assert bev_iou(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_symmetry(self, rng):
        for _ in range(300):
            a = random_bev(rng, span=4)
            b = random_bev(rng, span=4)
            assert bev_iou(a, b) == pytest.approx(bev_iou(b, a), abs=1e-12)

    def test_rigid_transform_invariance(self, rng):
        for _ in range(200):
            a = random_bev(rng, span=4)
            b = random_bev(rng, span=4)
            base = bev_iou(a, b)
            dx, dy = rng.uniform(-30, 30, size=2)
            phi = rng.uniform(-math.pi, math.pi)
            c, s = math.cos(phi), math.sin(phi)

            def moved(box):
                return BoxBEV(c * box.x - s * box.y + dx,
                              s * box.x + c * box.y + dy,
                              box.l, box.w, box.theta + phi)

            assert bev_iou(moved(a), moved(b)) == pytest.approx(base, abs=1e-9)

    def test_matches_raster_oracle(self, rng):
        for _ in range(150):
            a = random_bev(rng, span=3)
            b = random_bev(rng, span=3)
            assert bev_iou(a, b) == pytest.approx(raster_bev_iou(a, b), abs=1e-3)

    def test_range(self, rng):
        for _ in range(200):
            v = bev_iou(random_bev(rng, span=3), random_bev(rng, span=3))
            assert 0.0 <= v <= 1.0


class TestIou3d:
    def test_identical_is_one(self, rng):
        box = random_box3d(rng)
        assert iou3d(box, box) == 1.0

    def test_no_vertical_overlap(self):
        a = Box3D(0, 0, 0, 4, 2, 1.5, 0.2)
        b = Box3D(0, 0, 1.5, 4, 2, 1.5, 0.2)
        assert iou3d(a, b) == 0.0

    def test_reduces_to_bev_iou_for_matched_height(self, rng):
        for _ in range(100):
            a = random_bev(rng, span=3)
            b = random_bev(rng, span=3)
            a3 = Box3D.from_bev(a, z=1.0, h=2.0)
            b3 = Box3D.from_bev(b, z=1.0, h=2.0)
            assert iou3d(a3, b3) == pytest.approx(bev_iou(a, b), abs=1e-12)

    def test_matches_raster_oracle(self, rng):
        for _ in range(60):
            a = random_box3d(rng, span=3)
            b = random_box3d(rng, span=3)
            assert iou3d(a, b) == pytest.approx(raster_iou3d(a, b), abs=1e-3)


class TestPointCloud:
    def test_shape_enforced(self):
        with pytest.raises(ValueError):
            PointCloud(np.zeros((3, 3)))

    def test_finite_enforced(self):
        pts = np.zeros((2, 4))
        pts[1, 2] = math.inf
        with pytest.raises(ValueError):
            PointCloud(pts)

    def test_views(self):
        pts = np.arange(8.0).reshape(2, 4)
        cloud = PointCloud(pts)
        assert cloud.xy.shape == (2, 2)
        assert cloud.xyz.shape == (2, 3)
        assert len(cloud) == 2
