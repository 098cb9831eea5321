"""Seed-deterministic synthetic scenes for tests and demos.

Each scene has a gently tilted ground plane sampled as a jittered grid,
a handful of car-sized boxes with point pillars at a chosen subset of
their footprint corners, and some clutter.  Pillars drive the corner
visibility rule, so which corners are annotatable is controlled exactly:
no other point is allowed within the visibility radius of any corner.

Scenes can be written out as a dataset (point clouds, calibration, labels,
weak annotations, and a truth manifest) in the directory layout the CLI
and service consume.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Box3D, PointCloud
from .kitti_io import (
    Calib,
    CalibComponents,
    box3d_to_label,
    format_calib_text,
    format_label_file,
    save_point_cloud,
    write_annotation_file,
)
from .recovery import GroundPlane
from .weak_labels import WeakAnnotation, labels_to_weak

CORNER_CLEARANCE = 0.5  # meters; keep stray points outside the visibility rule
MIN_SEPARATION = 7.0    # meters between object centers

ADJACENT_PAIRS = ((0, 3), (1, 2), (0, 1), (2, 3))


@dataclass(frozen=True)
class SceneObject:
    object_id: str
    box: Box3D
    pillar_corners: tuple[int, ...]  # corner indices given point support


@dataclass(frozen=True)
class Scene:
    frame: str
    cloud: PointCloud
    calib: Calib
    ground: GroundPlane
    objects: tuple[SceneObject, ...]
    annotations: tuple[WeakAnnotation, ...]

    @property
    def boxes(self) -> tuple[Box3D, ...]:
        return tuple(o.box for o in self.objects)


def default_calib() -> Calib:
    """Forward-looking camera: sensor x becomes depth, z becomes image up."""
    cam = np.array([
        [721.5377, 0.0, 609.5593, 44.85728],
        [0.0, 721.5377, 172.854, 0.2163791],
        [0.0, 0.0, 1.0, 0.002745884],
    ])
    sensor_to_camera = np.array([
        [0.0, -1.0, 0.0, 0.02],
        [0.0, 0.0, -1.0, -0.06],
        [1.0, 0.0, 0.0, -0.10],
    ])
    return Calib.from_components(CalibComponents(
        camera_projection=cam,
        rectification=np.eye(3),
        sensor_to_camera=sensor_to_camera,
    ))


def _ground_plane(rng: np.random.Generator) -> tuple[GroundPlane, np.ndarray]:
    """Random gentle tilt; returns the plane and its (gx, gy, g0) height form."""
    gx, gy = rng.uniform(-0.03, 0.03, size=2)
    g0 = rng.uniform(-0.2, 0.2)
    norm = math.sqrt(gx * gx + gy * gy + 1.0)
    plane = GroundPlane(-gx / norm, -gy / norm, 1.0 / norm, -g0 / norm)
    return plane, np.array([gx, gy, g0])


def _height_at(coef: np.ndarray, x, y):
    return coef[0] * x + coef[1] * y + coef[2]


def _place_boxes(rng: np.random.Generator, coef: np.ndarray, count: int,
                 dims: tuple[float, float] | None) -> list[Box3D]:
    boxes: list[Box3D] = []
    attempts = 0
    while len(boxes) < count and attempts < 500:
        attempts += 1
        x = rng.uniform(8.0, 32.0)
        y = rng.uniform(-12.0, 12.0)
        if any(math.hypot(x - b.x, y - b.y) < MIN_SEPARATION for b in boxes):
            continue
        if dims is None:
            l = rng.uniform(3.2, 4.6)
            w = rng.uniform(1.5, 1.9)
        else:
            l, w = dims
        h = rng.uniform(1.3, 1.8)
        theta = rng.uniform(-math.pi, math.pi)
        z_bottom = _height_at(coef, x, y)
        boxes.append(Box3D(x, y, z_bottom + h / 2.0, l, w, h, theta))
    return boxes


def _pillar_points(rng: np.random.Generator, box: Box3D,
                   corner_indices: tuple[int, ...]) -> np.ndarray:
    rows = []
    for n in corner_indices:
        cx, cy = box.bev.corner_xy(n)
        k = int(rng.integers(6, 12))
        r = rng.uniform(0.03, 0.15, size=k)
        ang = rng.uniform(0.0, 2.0 * math.pi, size=k)
        # Keep pillar bottoms clear of the ground-plane inlier band.
        z = rng.uniform(box.z_bottom + 0.25, box.z_top, size=k)
        refl = rng.uniform(0.0, 1.0, size=k)
        rows.append(np.column_stack([
            cx + r * np.cos(ang), cy + r * np.sin(ang), z, refl,
        ]))
    if not rows:
        return np.zeros((0, 4))
    return np.vstack(rows)


def _all_corners(boxes: list[Box3D]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 2))
    return np.vstack([b.bev.corner_array() for b in boxes])


def _outside_clearance(xy: np.ndarray, corners: np.ndarray) -> np.ndarray:
    if corners.shape[0] == 0:
        return np.ones(xy.shape[0], dtype=bool)
    dx = xy[:, 0:1] - corners[None, :, 0]
    dy = xy[:, 1:2] - corners[None, :, 1]
    d2 = dx * dx + dy * dy
    return d2.min(axis=1) > CORNER_CLEARANCE * CORNER_CLEARANCE


def _ground_points(rng: np.random.Generator, coef: np.ndarray,
                   corners: np.ndarray) -> np.ndarray:
    xs = np.arange(2.0, 40.0, 0.75)
    ys = np.arange(-15.0, 15.0, 0.75)
    gx, gy = np.meshgrid(xs, ys)
    xy = np.column_stack([gx.ravel(), gy.ravel()])
    xy = xy + rng.uniform(-0.25, 0.25, size=xy.shape)
    xy = xy[_outside_clearance(xy, corners)]
    z = _height_at(coef, xy[:, 0], xy[:, 1]) + rng.uniform(-0.005, 0.005, size=len(xy))
    refl = rng.uniform(0.0, 1.0, size=len(xy))
    return np.column_stack([xy, z, refl])


def _clutter_points(rng: np.random.Generator, coef: np.ndarray,
                    corners: np.ndarray) -> np.ndarray:
    count = int(rng.integers(8, 20))
    xy = np.column_stack([
        rng.uniform(2.0, 40.0, size=3 * count),
        rng.uniform(-15.0, 15.0, size=3 * count),
    ])
    xy = xy[_outside_clearance(xy, corners)][:count]
    z = _height_at(coef, xy[:, 0], xy[:, 1]) + rng.uniform(0.3, 2.0, size=len(xy))
    refl = rng.uniform(0.0, 1.0, size=len(xy))
    return np.column_stack([xy, z, refl])


def generate_scene(frame_index: int = 0, seed: int = 0, *,
                   dims: tuple[float, float] | None = None) -> Scene:
    """Build one deterministic scene; same (frame_index, seed) → same scene.

    ``dims`` fixes every object's footprint to (l, w), modeling a fleet of
    one vehicle class so a class-size prior is exact.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(frame_index,))
    )
    frame = f"{frame_index:06d}"
    ground, coef = _ground_plane(rng)

    n_full = int(rng.integers(2, 5))
    extras = []
    if rng.random() < 0.35:
        extras.append("side")
    if rng.random() < 0.25:
        extras.append("diag")
    if rng.random() < 0.30:
        extras.append("single")
    if rng.random() < 0.25:
        extras.append("hidden")
    boxes = _place_boxes(rng, coef, n_full + len(extras), dims)

    objects = []
    for i, box in enumerate(boxes):
        if i < n_full:
            if rng.random() < 0.65:
                pillars = (0, 1, 2, 3)
            else:
                dropped = int(rng.integers(0, 4))
                pillars = tuple(n for n in range(4) if n != dropped)
        else:
            kind = extras[i - n_full]
            if kind == "side":
                pillars = ADJACENT_PAIRS[int(rng.integers(0, 4))]
            elif kind == "diag":
                pillars = (0, 2) if rng.random() < 0.5 else (1, 3)
            elif kind == "single":
                pillars = (int(rng.integers(0, 4)),)
            else:
                pillars = ()
        objects.append(SceneObject(str(i), box, pillars))

    corners = _all_corners(boxes)
    parts = [_ground_points(rng, coef, corners)]
    for obj in objects:
        parts.append(_pillar_points(rng, obj.box, obj.pillar_corners))
    parts.append(_clutter_points(rng, coef, corners))
    points = np.vstack([p for p in parts if len(p)])
    points = points[rng.permutation(len(points))]
    cloud = PointCloud(points)

    calib = default_calib()
    annotations = tuple(labels_to_weak(
        [o.box for o in objects], cloud, calib, frame=frame,
        object_ids=[o.object_id for o in objects],
    ))
    return Scene(frame, cloud, calib, ground, tuple(objects), annotations)


def is_recoverable(ann: WeakAnnotation) -> bool:
    """Enough evidence for a full 3D box without priors: 3+ corners and an image box."""
    return len(ann.corners) >= 3 and ann.image_box is not None


def write_scene(scene: Scene, root) -> None:
    root = Path(root)
    for sub in ("velodyne", "calib", "label_2", "annotations"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    save_point_cloud(scene.cloud, root / "velodyne" / f"{scene.frame}.bin")
    (root / "calib" / f"{scene.frame}.txt").write_text(
        format_calib_text(scene.calib.components)
    )
    labels = [
        box3d_to_label(o.box, scene.calib, class_name="Car") for o in scene.objects
    ]
    (root / "label_2" / f"{scene.frame}.txt").write_text(format_label_file(labels))
    write_annotation_file(root / "annotations" / f"{scene.frame}.jsonl",
                          scene.annotations)


def generate_dataset(root, frames: int = 10, seed: int = 0,
                     dims: tuple[float, float] | None = None) -> dict:
    """Write a multi-frame dataset plus truth.json; returns the truth manifest."""
    root = Path(root)
    manifest: dict = {"seed": seed, "frames": {}}
    for i in range(frames):
        scene = generate_scene(i, seed, dims=dims)
        write_scene(scene, root)
        manifest["frames"][scene.frame] = {
            "ground": [scene.ground.a, scene.ground.b, scene.ground.c, scene.ground.d],
            "objects": [
                {
                    "id": obj.object_id,
                    "box": [obj.box.x, obj.box.y, obj.box.z,
                            obj.box.l, obj.box.w, obj.box.h, obj.box.theta],
                    "n_visible": len(ann.corners),
                    "recoverable": is_recoverable(ann),
                }
                for obj, ann in zip(scene.objects, scene.annotations)
            ],
        }
    (root / "truth.json").write_text(json.dumps(manifest, indent=1))
    return manifest
