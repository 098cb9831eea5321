"""KITTI-format dataset files and the corner-annotation interchange format.

Covers the 15-field object label grammar, calibration files and their
composition into a single sensor-to-pixel projection, float32 point cloud
payloads, and JSON-lines corner annotation files.

Label records live in the camera frame (x right, y down, z forward) with
the location at the bottom face center; boxes in this package live in the
sensor frame (x forward, y left, z up) centered mid-height.  The
conversion helpers translate between the two.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BehindCamera, MalformedRecord, MissingComponent, TruncatedFile
from .geometry import Box3D, Corner, PointCloud, canonicalize_yaw
from .weak_labels import WeakAnnotation

POINT_RECORD_BYTES = 16  # x, y, z, reflectance as little-endian float32


@dataclass(frozen=True)
class KittiLabel:
    """One object label line: class, 2D box, dimensions, location, heading."""

    class_name: str
    truncated: float
    occluded: int
    alpha: float
    image_box: tuple[float, float, float, float]  # u_min, v_min, u_max, v_max
    dimensions: tuple[float, float, float]        # h, w, l
    location: tuple[float, float, float]          # camera frame, bottom center
    rotation_y: float
    score: float | None = None

    def __post_init__(self):
        h, w, l = self.dimensions
        if not (h > 0 and w > 0 and l > 0):
            raise ValueError(f"dimensions must be positive, got {self.dimensions}")
        u0, v0, u1, v1 = self.image_box
        if not (u0 < u1 and v0 < v1):
            raise ValueError(f"image box must be ordered, got {self.image_box}")


def parse_label_line(line: str, line_no: int = 1) -> KittiLabel:
    fields = line.split()
    if len(fields) not in (15, 16):
        raise MalformedRecord(line_no, f"expected 15 fields, got {len(fields)}")
    try:
        return KittiLabel(
            class_name=fields[0],
            truncated=float(fields[1]),
            occluded=int(float(fields[2])),
            alpha=float(fields[3]),
            image_box=tuple(float(v) for v in fields[4:8]),
            dimensions=tuple(float(v) for v in fields[8:11]),
            location=tuple(float(v) for v in fields[11:14]),
            rotation_y=float(fields[14]),
            score=float(fields[15]) if len(fields) == 16 else None,
        )
    except ValueError as exc:
        raise MalformedRecord(line_no, str(exc)) from exc


def parse_label_file(text: str) -> list[KittiLabel]:
    """Parse a label file; raises MalformedRecord with the offending line number."""
    labels = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        labels.append(parse_label_line(line, line_no))
    return labels


def format_label(label: KittiLabel) -> str:
    parts = [
        label.class_name,
        repr(float(label.truncated)),
        str(int(label.occluded)),
        repr(float(label.alpha)),
        *(repr(float(v)) for v in label.image_box),
        *(repr(float(v)) for v in label.dimensions),
        *(repr(float(v)) for v in label.location),
        repr(float(label.rotation_y)),
    ]
    if label.score is not None:
        parts.append(repr(float(label.score)))
    return " ".join(parts)


def format_label_file(labels: Iterable[KittiLabel]) -> str:
    return "".join(format_label(lb) + "\n" for lb in labels)


@dataclass(frozen=True)
class CalibComponents:
    """The three factors of the sensor-to-pixel projection.

    A factor may be None while a calibration is assembled; composing then
    fails with MissingComponent.
    """

    camera_projection: np.ndarray | None = field(repr=False)  # 3x4 cam -> pixels
    rectification: np.ndarray | None = field(repr=False)      # 3x3
    sensor_to_camera: np.ndarray | None = field(repr=False)   # 3x4 rigid transform

    def __post_init__(self):
        shapes = {
            "camera_projection": (3, 4),
            "rectification": (3, 3),
            "sensor_to_camera": (3, 4),
        }
        for name, shape in shapes.items():
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.asarray(value, dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(
                    f"{name} must have shape {shape}, got {arr.shape}"
                )
            object.__setattr__(self, name, arr)


def compose_projection(components: CalibComponents) -> np.ndarray:
    """Multiply the calibration factors into one 3x4 sensor-to-pixel matrix."""
    if components is None:
        raise MissingComponent("calibration components are required")
    for name in ("camera_projection", "rectification", "sensor_to_camera"):
        if getattr(components, name) is None:
            raise MissingComponent(f"calibration is missing {name}")
    rect4 = np.eye(4)
    rect4[:3, :3] = components.rectification
    s2c4 = np.eye(4)
    s2c4[:3, :] = components.sensor_to_camera
    return components.camera_projection @ rect4 @ s2c4


@dataclass(frozen=True)
class Calib:
    """Composed sensor-to-pixel projection, with its factors when known."""

    P: np.ndarray = field(repr=False)
    components: CalibComponents | None = None

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.float64)
        if P.shape != (3, 4):
            raise ValueError(f"projection must be 3x4, got {P.shape}")
        if not np.any(P[2] != 0.0):
            raise ValueError("bottom row of the projection must be nonzero")
        object.__setattr__(self, "P", P)

    @staticmethod
    def from_components(components: CalibComponents) -> "Calib":
        return Calib(P=compose_projection(components), components=components)

    @staticmethod
    def from_kitti_text(text: str, camera: str = "P2") -> "Calib":
        entries = parse_calib_text(text)
        for key in (camera, "R0_rect", "Tr_velo_to_cam"):
            if key not in entries:
                raise MissingComponent(f"calibration is missing {key}")
        return Calib.from_components(CalibComponents(
            camera_projection=entries[camera].reshape(3, 4),
            rectification=entries["R0_rect"].reshape(3, 3),
            sensor_to_camera=entries["Tr_velo_to_cam"].reshape(3, 4),
        ))

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project sensor-frame points to pixels; returns (uv, depth).

        Raises BehindCamera when any point has non-positive projective
        depth.
        """
        pts = np.asarray(points, dtype=np.float64)
        hom = np.hstack([pts, np.ones((pts.shape[0], 1))])
        proj = hom @ self.P.T
        depth = proj[:, 2]
        if np.any(depth <= 0.0):
            raise BehindCamera(
                f"{int((depth <= 0).sum())} of {len(depth)} points project behind the camera"
            )
        return proj[:, :2] / depth[:, None], depth


def parse_calib_text(text: str) -> dict[str, np.ndarray]:
    """Parse 'KEY: v0 v1 ...' lines into flat float arrays."""
    entries = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if ":" not in line:
            raise MalformedRecord(line_no, "expected 'KEY: values'")
        key, _, rest = line.partition(":")
        try:
            entries[key.strip()] = np.array([float(v) for v in rest.split()])
        except ValueError as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
    return entries


def format_calib_text(components: CalibComponents) -> str:
    """Write calibration factors in the dataset's text layout."""
    def row(key: str, mat: np.ndarray) -> str:
        return key + ": " + " ".join(repr(float(v)) for v in np.ravel(mat))

    cam = components.camera_projection
    identity34 = np.hstack([np.eye(3), np.zeros((3, 1))])
    lines = [
        row("P0", cam), row("P1", cam), row("P2", cam), row("P3", cam),
        row("R0_rect", components.rectification),
        row("Tr_velo_to_cam", components.sensor_to_camera),
        row("Tr_imu_to_velo", identity34),
    ]
    return "\n".join(lines) + "\n"


def _sensor_to_camera_parts(calib: Calib) -> tuple[np.ndarray, np.ndarray]:
    comp = calib.components
    if comp is None or comp.rectification is None or comp.sensor_to_camera is None:
        raise MissingComponent(
            "label conversion needs the calibration factors, not just the composition"
        )
    rot = comp.rectification @ comp.sensor_to_camera[:, :3]
    off = comp.rectification @ comp.sensor_to_camera[:, 3]
    return rot, off


def label_to_box3d(label: KittiLabel, calib: Calib) -> Box3D:
    """Convert a camera-frame label to a sensor-frame box.

    The bottom-center location is mapped into the sensor frame first and
    the half-height lift happens along sensor up, keeping recovered boxes
    gravity-aligned even under slightly tilted extrinsics.
    """
    rot, off = _sensor_to_camera_parts(calib)
    h, w, l = label.dimensions
    bottom = np.linalg.solve(rot, np.array(label.location, dtype=np.float64) - off)
    yaw = canonicalize_yaw(-label.rotation_y - math.pi / 2.0)
    return Box3D(float(bottom[0]), float(bottom[1]), float(bottom[2]) + h / 2.0,
                 l, w, h, yaw)


def box3d_to_label(box: Box3D, calib: Calib, class_name: str = "Car", *,
                   image_box: tuple[float, float, float, float] | None = None,
                   truncated: float = 0.0, occluded: int = 0,
                   score: float | None = None) -> KittiLabel:
    """Convert a sensor-frame box to a camera-frame label.

    The image box is projected from the box's eight corners unless given.
    """
    rot, off = _sensor_to_camera_parts(calib)
    bottom_cam = rot @ np.array([box.x, box.y, box.z_bottom]) + off
    ry = canonicalize_yaw(-box.theta - math.pi / 2.0)
    alpha = canonicalize_yaw(ry - math.atan2(bottom_cam[0], bottom_cam[2]))
    if image_box is None:
        image_box = project_box3d(box, calib)
    return KittiLabel(
        class_name=class_name,
        truncated=truncated,
        occluded=occluded,
        alpha=alpha,
        image_box=image_box,
        dimensions=(box.h, box.w, box.l),
        location=(float(bottom_cam[0]), float(bottom_cam[1]), float(bottom_cam[2])),
        rotation_y=ry,
        score=score,
    )


def project_box3d(box: Box3D, calib: Calib) -> tuple[float, float, float, float]:
    """Axis-aligned pixel bounds of the projected box corners."""
    uv, _ = calib.project(box.corners_3d())
    return (
        float(uv[:, 0].min()), float(uv[:, 1].min()),
        float(uv[:, 0].max()), float(uv[:, 1].max()),
    )


def load_point_cloud(data: bytes) -> PointCloud:
    """Decode a float32 x/y/z/reflectance payload."""
    if len(data) % POINT_RECORD_BYTES != 0:
        raise TruncatedFile(
            f"payload of {len(data)} bytes is not a multiple of {POINT_RECORD_BYTES}"
        )
    arr = np.frombuffer(data, dtype="<f4").reshape(-1, 4).astype(np.float64)
    return PointCloud(arr)


def load_point_cloud_file(path) -> PointCloud:
    return load_point_cloud(Path(path).read_bytes())


def save_point_cloud(cloud: PointCloud, path) -> None:
    Path(path).write_bytes(cloud.points.astype("<f4").tobytes())


def annotation_to_record(ann: WeakAnnotation) -> dict:
    return {
        "frame": ann.frame,
        "object": ann.object_id,
        "corners": [
            {"n": c.index, "x": c.x, "y": c.y, "zg": c.z_g} for c in ann.corners
        ],
        "image_box": list(ann.image_box) if ann.image_box is not None else None,
    }


def record_to_annotation(record: dict) -> WeakAnnotation:
    corners = tuple(
        Corner(index=int(c["n"]), x=float(c["x"]), y=float(c["y"]),
               z_g=float(c.get("zg", 0.0)))
        for c in record["corners"]
    )
    image_box = record.get("image_box")
    return WeakAnnotation(
        frame=str(record["frame"]),
        object_id=str(record["object"]),
        corners=corners,
        image_box=tuple(image_box) if image_box is not None else None,
    )


def format_annotations(annotations: Iterable[WeakAnnotation]) -> str:
    """One JSON record per line; float fields keep full precision."""
    return "".join(
        json.dumps(annotation_to_record(a)) + "\n" for a in annotations
    )


def parse_annotations(text: str) -> list[WeakAnnotation]:
    out = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(record_to_annotation(json.loads(line)))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
    return out


def read_annotation_file(path) -> list[WeakAnnotation]:
    return parse_annotations(Path(path).read_text())


def write_annotation_file(path, annotations: Sequence[WeakAnnotation]) -> None:
    """Write annotations atomically: temp file in place, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(format_annotations(annotations))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def annotations_by_frame(annotations: Iterable[WeakAnnotation]) -> dict[str, list[WeakAnnotation]]:
    grouped: dict[str, list[WeakAnnotation]] = {}
    for ann in annotations:
        grouped.setdefault(ann.frame, []).append(ann)
    return grouped
