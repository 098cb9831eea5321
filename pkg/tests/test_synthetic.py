import json
import math

import numpy as np
import pytest

from cornerbox.kitti_io import label_to_box3d
from cornerbox.pipeline import Dataset
from cornerbox.synthetic import (
    CORNER_CLEARANCE,
    MIN_SEPARATION,
    generate_dataset,
    generate_scene,
    is_recoverable,
    write_scene,
)
from cornerbox.weak_labels import VISIBILITY_RADIUS, visibility_filter


class TestGenerateScene:
    def test_deterministic(self):
        a = generate_scene(3, seed=11)
        b = generate_scene(3, seed=11)
        assert np.array_equal(a.cloud.points, b.cloud.points)
        assert a.annotations == b.annotations
        assert a.boxes == b.boxes

    def test_frames_differ(self):
        a = generate_scene(0, seed=11)
        b = generate_scene(1, seed=11)
        assert not np.array_equal(a.cloud.points, b.cloud.points)

    def test_annotated_corners_match_visibility_rule(self):
        # Pillars are the only points near corners, so the visibility filter
        # must reproduce each object's pillar subset exactly.
        for frame_index in range(6):
            scene = generate_scene(frame_index, seed=21)
            for obj, ann in zip(scene.objects, scene.annotations):
                vis = visibility_filter(obj.box.bev, scene.cloud)
                got = {c.index for c in vis.visible()}
                assert got == set(obj.pillar_corners)
                assert ann.index_set == set(obj.pillar_corners)

    def test_non_pillar_corners_have_no_nearby_points(self):
        assert CORNER_CLEARANCE > VISIBILITY_RADIUS
        scene = generate_scene(1, seed=33)
        xy = scene.cloud.points[:, :2]
        for obj in scene.objects:
            for n in range(4):
                if n in obj.pillar_corners:
                    continue
                cx, cy = obj.box.bev.corner_xy(n)
                d2 = (xy[:, 0] - cx) ** 2 + (xy[:, 1] - cy) ** 2
                assert math.sqrt(float(d2.min())) > VISIBILITY_RADIUS

    def test_objects_separated(self):
        for frame_index in range(5):
            scene = generate_scene(frame_index, seed=44)
            boxes = scene.boxes
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    d = math.hypot(boxes[i].x - boxes[j].x,
                                   boxes[i].y - boxes[j].y)
                    assert d >= MIN_SEPARATION

    def test_boxes_sit_on_ground(self):
        scene = generate_scene(2, seed=55)
        for obj in scene.objects:
            box = obj.box
            expected = scene.ground.height_at(box.x, box.y)
            assert box.z_bottom == pytest.approx(expected, abs=1e-9)

    def test_fixed_dims_override(self):
        scene = generate_scene(0, seed=66, dims=(3.9, 1.6))
        for obj in scene.objects:
            assert obj.box.l == 3.9
            assert obj.box.w == 1.6

    def test_annotations_carry_image_boxes(self):
        scene = generate_scene(0, seed=12)
        for ann in scene.annotations:
            assert ann.image_box is not None
            u0, v0, u1, v1 = ann.image_box
            assert u0 < u1 and v0 < v1


class TestIsRecoverable:
    def test_thresholds(self):
        scene = generate_scene(4, seed=13)
        for ann in scene.annotations:
            expected = len(ann.corners) >= 3 and ann.image_box is not None
            assert is_recoverable(ann) == expected


class TestWriteScene:
    def test_files_round_trip(self, tmp_path):
        scene = generate_scene(0, seed=5)
        write_scene(scene, tmp_path)
        ds = Dataset(tmp_path)
        assert ds.frames() == [scene.frame]
        cloud = ds.cloud(scene.frame)
        # float32 storage quantizes the in-memory float64 scene.
        assert cloud.points == pytest.approx(scene.cloud.points, abs=1e-4)
        assert ds.annotations(scene.frame) == list(scene.annotations)
        labels = ds.labels(scene.frame)
        calib = ds.calib(scene.frame)
        assert len(labels) == len(scene.objects)
        for label, obj in zip(labels, scene.objects):
            box = label_to_box3d(label, calib)
            assert box.x == pytest.approx(obj.box.x, abs=1e-6)
            assert box.y == pytest.approx(obj.box.y, abs=1e-6)
            assert box.z == pytest.approx(obj.box.z, abs=1e-6)
            assert box.h == pytest.approx(obj.box.h, abs=1e-6)


class TestGenerateDataset:
    def test_manifest_matches_disk(self, small_dataset):
        root, manifest = small_dataset
        assert manifest["seed"] == 5
        assert sorted(manifest["frames"]) == ["000000", "000001", "000002"]
        on_disk = json.loads((root / "truth.json").read_text())
        assert on_disk == manifest

    def test_manifest_object_fields(self, small_dataset):
        root, manifest = small_dataset
        ds = Dataset(root)
        for frame, entry in manifest["frames"].items():
            anns = {a.object_id: a for a in ds.annotations(frame)}
            assert len(entry["objects"]) == len(anns)
            for obj in entry["objects"]:
                ann = anns[obj["id"]]
                assert obj["n_visible"] == len(ann.corners)
                assert obj["recoverable"] == is_recoverable(ann)
                x, y, z, l, w, h, theta = obj["box"]
                assert l > 0 and w > 0 and h > 0

    def test_dims_override_propagates(self, tmp_path):
        manifest = generate_dataset(tmp_path, frames=2, seed=8, dims=(3.9, 1.6))
        for entry in manifest["frames"].values():
            for obj in entry["objects"]:
                assert obj["box"][3] == 3.9
                assert obj["box"][4] == 1.6
