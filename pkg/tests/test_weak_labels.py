import math

import numpy as np
import pytest

from cornerbox.errors import LocalizeOnly, Underdetermined
from cornerbox.geometry import (
    Box3D,
    BoxBEV,
    Corner,
    PointCloud,
    corners_from_box,
    yaw_distance,
)
from cornerbox.weak_labels import (
    FOREGROUND_RADIUS,
    VISIBILITY_RADIUS,
    ErasureStrategy,
    PointLabel,
    TargetCase,
    WeakAnnotation,
    annotation_weight,
    erasure_mask,
    foreground_mask,
    labels_to_weak,
    visibility_filter,
    weak_to_full,
)

from conftest import random_bev
from oracles import brute_erasure, brute_foreground, brute_visibility

BOX = BoxBEV(10, 5, 4, 2, 0)


def cloud_of(*xy):
    pts = np.zeros((len(xy), 4))
    for i, (x, y) in enumerate(xy):
        pts[i, 0] = x
        pts[i, 1] = y
    return PointCloud(pts)


def corners_subset(box: BoxBEV, indices, z_g=0.0):
    full = corners_from_box(box)
    return tuple(
        Corner(n, full.by_index(n).x, full.by_index(n).y, z_g) for n in indices
    )


class TestWeakAnnotation:
    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValueError):
            WeakAnnotation("f", "o", (Corner(0, 0, 0), Corner(0, 1, 1)))

    def test_unordered_image_box_rejected(self):
        with pytest.raises(ValueError):
            WeakAnnotation("f", "o", corners_subset(BOX, (0,)),
                           image_box=(10, 10, 5, 20))

    def test_index_set_and_lookup(self):
        ann = WeakAnnotation("f", "o", corners_subset(BOX, (0, 2)))
        assert ann.index_set == frozenset({0, 2})
        assert ann.corner(2).x == pytest.approx(8.0)
        with pytest.raises(KeyError):
            ann.corner(1)


class TestVisibilityFilter:
    def test_single_near_point(self):
        cs = visibility_filter(BOX, cloud_of((12.05, 6.0)))
        assert [c.index for c in cs.visible()] == [0]

    def test_empty_cloud(self):
        cs = visibility_filter(BOX, cloud_of())
        assert list(cs.visible()) == []

    def test_front_face_only(self):
        # Points strung along the +x face see corners 0 and 1 only.
        ys = np.linspace(4.0, 6.0, 21)
        cs = visibility_filter(BOX, cloud_of(*[(12.0, y) for y in ys]))
        assert sorted(c.index for c in cs.visible()) == [0, 1]

    def test_boundary_radius_inclusive(self):
        # Power-of-two radius keeps the boundary distance exact in binary.
        cs = visibility_filter(BOX, cloud_of((12.25, 6.0)), radius=0.25)
        assert [c.index for c in cs.visible()] == [0]
        cs = visibility_filter(BOX, cloud_of((12.2500001, 6.0)), radius=0.25)
        assert list(cs.visible()) == []

    def test_matches_brute_force(self, rng):
        for _ in range(30):
            box = random_bev(rng, span=6)
            pts = np.zeros((200, 4))
            pts[:, 0] = rng.uniform(-10, 10, 200)
            pts[:, 1] = rng.uniform(-10, 10, 200)
            cloud = PointCloud(pts)
            got = {c.index for c in visibility_filter(box, cloud).visible()}
            flags = brute_visibility(box, cloud.points, VISIBILITY_RADIUS)
            assert got == {n for n, v in enumerate(flags) if v}


class TestWeakToFull:
    def test_side_pair_example(self):
        ann = WeakAnnotation("f", "o", corners_subset(BOX, (0, 3)))
        tgt = weak_to_full(ann)
        assert tgt.case is TargetCase.SIDE
        assert tgt.l == pytest.approx(4.0, abs=1e-12)
        assert tgt.w is None
        assert tgt.theta == pytest.approx(0.0, abs=1e-12)

    def test_front_pair_example(self):
        ann = WeakAnnotation("f", "o", corners_subset(BOX, (0, 1)))
        tgt = weak_to_full(ann)
        assert tgt.case is TargetCase.FRONT_REAR
        assert tgt.w == pytest.approx(2.0, abs=1e-12)
        assert tgt.l is None
        assert tgt.theta == pytest.approx(0.0, abs=1e-12)

    def test_three_corner_example(self):
        box = BoxBEV(10, 5, 4, 2, 0.3)
        ann = WeakAnnotation("f", "o", corners_subset(box, (0, 1, 2)))
        tgt = weak_to_full(ann)
        assert tgt.case is TargetCase.THREE_PLUS
        assert tgt.l == pytest.approx(4.0, abs=1e-6)
        assert tgt.w == pytest.approx(2.0, abs=1e-6)
        assert yaw_distance(tgt.theta, 0.3) < 1e-6

    def test_single_corner_localize_only(self):
        ann = WeakAnnotation("f", "o", corners_subset(BOX, (2,)))
        with pytest.raises(LocalizeOnly):
            weak_to_full(ann)

    def test_bare_diagonal_underdetermined(self):
        ann = WeakAnnotation("f", "o", corners_subset(BOX, (0, 2)))
        with pytest.raises(Underdetermined):
            weak_to_full(ann)
        with pytest.raises(Underdetermined):
            weak_to_full(ann, l_prior=4.0)

    def test_diagonal_with_priors(self):
        box = BoxBEV(3, -2, 4, 2, 0.7)
        ann = WeakAnnotation("f", "o", corners_subset(box, (1, 3)))
        tgt = weak_to_full(ann, l_prior=4.0, w_prior=2.0)
        assert tgt.case is TargetCase.THREE_PLUS
        assert tgt.l == pytest.approx(4.0, abs=1e-9)
        assert tgt.w == pytest.approx(2.0, abs=1e-9)
        assert yaw_distance(tgt.theta, 0.7) < 1e-9

    def test_empty_annotation_rejected(self):
        ann = WeakAnnotation("f", "o", ())
        with pytest.raises(ValueError):
            weak_to_full(ann)

    def test_exact_pairs_and_triples_recover_parameters(self, rng):
        for _ in range(300):
            box = random_bev(rng)
            for pair, case in (((0, 3), TargetCase.SIDE),
                               ((1, 2), TargetCase.SIDE),
                               ((0, 1), TargetCase.FRONT_REAR),
                               ((2, 3), TargetCase.FRONT_REAR)):
                tgt = weak_to_full(
                    WeakAnnotation("f", "o", corners_subset(box, pair)))
                assert tgt.case is case
                if case is TargetCase.SIDE:
                    assert tgt.l == pytest.approx(box.l, abs=1e-9)
                else:
                    assert tgt.w == pytest.approx(box.w, abs=1e-9)
                assert yaw_distance(tgt.theta, box.theta) < 1e-9
            triple = tuple(sorted(rng.choice(4, size=3, replace=False)))
            tgt = weak_to_full(WeakAnnotation("f", "o", corners_subset(box, triple)))
            assert tgt.l == pytest.approx(box.l, abs=1e-9)
            assert tgt.w == pytest.approx(box.w, abs=1e-9)
            assert yaw_distance(tgt.theta, box.theta) < 1e-9


class TestForegroundMask:
    def test_radius_examples(self):
        ann = WeakAnnotation("f", "o", (Corner(0, 12, 6),))
        mask = foreground_mask(ann, cloud_of((12.5, 6.0), (12.8, 6.0)))
        assert mask.labels[0] == PointLabel.FOREGROUND
        assert mask.labels[1] == PointLabel.BACKGROUND

    def test_multiple_annotations_union(self):
        anns = [
            WeakAnnotation("f", "a", (Corner(0, 0, 0),)),
            WeakAnnotation("f", "b", (Corner(1, 10, 0),)),
        ]
        mask = foreground_mask(anns, cloud_of((0.1, 0), (10.1, 0), (5, 0)))
        assert list(mask.labels) == [1, 1, 0]

    def test_matches_brute_force_exactly(self, rng):
        pts = np.zeros((5000, 4))
        pts[:, 0] = rng.uniform(-20, 20, 5000)
        pts[:, 1] = rng.uniform(-20, 20, 5000)
        cloud = PointCloud(pts)
        anns = [
            WeakAnnotation("f", str(i),
                           corners_subset(random_bev(rng, span=15),
                                          tuple(sorted(rng.choice(
                                              4, size=int(rng.integers(1, 5)),
                                              replace=False)))))
            for i in range(5)
        ]
        mask = foreground_mask(anns, cloud)
        corner_xys = [(c.x, c.y) for ann in anns for c in ann.corners]
        oracle = brute_foreground(corner_xys, cloud.points, FOREGROUND_RADIUS)
        assert np.array_equal(mask.labels, oracle)


class TestErasureMask:
    BOX = BoxBEV(0, 0, 4, 2, 0)

    def test_center_box_examples(self):
        mask = erasure_mask(self.BOX, cloud_of((0, 0), (1.8, 0.9)),
                            ErasureStrategy.CENTER_BOX, fraction=0.5)
        assert mask.labels[0] == PointLabel.ERASED
        assert mask.labels[1] == PointLabel.FOREGROUND

    def test_corner_blocks_examples(self):
        mask = erasure_mask(self.BOX, cloud_of((1.8, 0.9), (0, 0)),
                            ErasureStrategy.CORNER_BLOCKS, fraction=0.5)
        assert mask.labels[0] == PointLabel.ERASED
        assert mask.labels[1] == PointLabel.FOREGROUND

    def test_outside_is_background(self):
        mask = erasure_mask(self.BOX, cloud_of((5, 5)),
                            ErasureStrategy.CENTER_BOX)
        assert mask.labels[0] == PointLabel.BACKGROUND

    def test_partition_is_total(self, rng):
        pts = np.zeros((1000, 4))
        pts[:, :2] = rng.uniform(-4, 4, (1000, 2))
        cloud = PointCloud(pts)
        for strategy in ErasureStrategy:
            mask = erasure_mask(BoxBEV(0.5, -0.3, 4, 2, 0.4), cloud, strategy)
            total = sum(mask.count(lbl) for lbl in PointLabel)
            assert total == len(cloud)

    def test_matches_brute_force_exactly(self, rng):
        pts = np.zeros((5000, 4))
        pts[:, :2] = rng.uniform(-5, 5, (5000, 2))
        cloud = PointCloud(pts)
        for strategy in ErasureStrategy:
            for _ in range(5):
                box = random_bev(rng, span=2)
                mask = erasure_mask(box, cloud, strategy, fraction=0.5)
                oracle = brute_erasure(box, cloud.points, strategy.value, 0.5)
                assert np.array_equal(mask.labels, oracle)

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            erasure_mask(self.BOX, cloud_of((0, 0)),
                         ErasureStrategy.CENTER_BOX, fraction=1.5)


class TestAnnotationWeight:
    @pytest.mark.parametrize("m,expected", [(4, 1.0), (2, 2.0), (1, 4.0), (0, 0.0)])
    def test_examples(self, m, expected):
        assert annotation_weight(m) == expected

    def test_weight_times_count_is_total(self):
        for m in range(1, 5):
            assert annotation_weight(m) * m == 4.0

    def test_bounds(self):
        with pytest.raises(ValueError):
            annotation_weight(5)
        with pytest.raises(ValueError):
            annotation_weight(-1)
        with pytest.raises(ValueError):
            annotation_weight(1, full_count=0)


class TestLabelsToWeak:
    def test_surrounded_object_gets_four_corners(self):
        box = Box3D(10, 5, 1.0, 4, 2, 1.5, 0.0)
        pts = [(c.x + 0.05, c.y) for c in corners_from_box(box.bev).corners]
        anns = labels_to_weak([box], cloud_of(*pts), frame="000001")
        assert len(anns) == 1
        assert anns[0].index_set == frozenset({0, 1, 2, 3})
        assert anns[0].frame == "000001"
        for c in anns[0].corners:
            assert c.z_g == pytest.approx(box.z_bottom)

    def test_front_face_only_gets_two(self):
        box = Box3D(10, 5, 1.0, 4, 2, 1.5, 0.0)
        ys = np.linspace(4.0, 6.0, 21)
        anns = labels_to_weak([box], cloud_of(*[(12.0, y) for y in ys]))
        assert anns[0].index_set == frozenset({0, 1})

    def test_object_outside_cloud_is_empty_with_zero_weight(self):
        box = Box3D(100, 100, 1.0, 4, 2, 1.5, 0.0)
        anns = labels_to_weak([box], cloud_of((0, 0)))
        assert anns[0].corners == ()
        assert annotation_weight(len(anns[0].corners)) == 0.0

    def test_image_boxes_attached_by_order(self):
        boxes = [Box3D(10, 5, 1, 4, 2, 1.5, 0), Box3D(20, -5, 1, 4, 2, 1.5, 0)]
        ib = [(0, 0, 10, 10), None]
        anns = labels_to_weak(boxes, cloud_of((12, 6)), image_boxes=ib)
        assert anns[0].image_box == (0, 0, 10, 10)
        assert anns[1].image_box is None

    def test_misaligned_image_boxes_rejected(self):
        with pytest.raises(ValueError):
            labels_to_weak([Box3D(0, 0, 1, 4, 2, 1.5, 0)], cloud_of((0, 0)),
                           image_boxes=[None, None])

    def test_calib_projection_attaches_image_box(self):
        from cornerbox.synthetic import default_calib

        calib = default_calib()
        box = Box3D(10, 0, 1.0, 4, 2, 1.5, 0.2)
        anns = labels_to_weak([box], cloud_of((12, 1)), calib=calib)
        ib = anns[0].image_box
        assert ib is not None
        assert ib[0] < ib[2] and ib[1] < ib[3]
