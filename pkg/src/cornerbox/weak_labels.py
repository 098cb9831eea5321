"""Weak BEV-corner annotations and the point masks built from them.

A weak annotation records, per object, only the footprint corners an
annotator could see in the BEV: each corner's position, ground height and
index, plus the object's 2D image box when available.  The functions here
derive full regression targets from such partial corner sets, decide
which corners are visible at all, and partition clouds into foreground /
background / erased points for occlusion-simulation training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable, Sequence

import numpy as np

from .codecs import EncodedBox, Scheme, decode
from .errors import LocalizeOnly, Underdetermined
from .geometry import Box3D, BoxBEV, Corner, CornerSet, PointCloud, canonicalize_yaw, corners_from_box
from .recovery import fit_rectangle

VISIBILITY_RADIUS = 0.3  # meters; a corner with no point this close is invisible
FOREGROUND_RADIUS = 0.7  # meters; points this close to an annotated corner


@dataclass(frozen=True)
class WeakAnnotation:
    """One object's annotated corners, ground heights, and image box."""

    frame: str
    object_id: str
    corners: tuple[Corner, ...]
    image_box: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        indices = [c.index for c in self.corners]
        if len(indices) > 4:
            raise ValueError("an annotation holds at most 4 corners")
        if len(set(indices)) != len(indices):
            raise ValueError(f"duplicate corner indices: {sorted(indices)}")
        if self.image_box is not None:
            u0, v0, u1, v1 = self.image_box
            if not (u0 < u1 and v0 < v1):
                raise ValueError(f"image box must be ordered, got {self.image_box}")
            object.__setattr__(
                self, "image_box",
                (float(u0), float(v0), float(u1), float(v1)),
            )

    @property
    def index_set(self) -> frozenset[int]:
        return frozenset(c.index for c in self.corners)

    def corner(self, index: int) -> Corner:
        for c in self.corners:
            if c.index == index:
                return c
        raise KeyError(index)


class TargetCase(str, Enum):
    SIDE = "side"              # two corners along one side: length + heading
    FRONT_REAR = "front-rear"  # two corners across the body: width + heading
    THREE_PLUS = "three-plus"  # enough corners for every BEV parameter


@dataclass(frozen=True)
class WeakToFullTarget:
    """Box parameters a corner subset pins down; unknowns stay None."""

    case: TargetCase
    corners: tuple[Corner, ...]
    l: float | None
    w: float | None
    theta: float | None


class ErasureStrategy(str, Enum):
    CENTER_BOX = "center-box"
    CORNER_BLOCKS = "corner-blocks"


class PointLabel(IntEnum):
    BACKGROUND = 0
    FOREGROUND = 1
    ERASED = 2


@dataclass(frozen=True)
class MaskedPoints:
    """Per-point labels partitioning one cloud."""

    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int8))

    def count(self, label: PointLabel) -> int:
        return int((self.labels == int(label)).sum())

    def indices(self, label: PointLabel) -> np.ndarray:
        return np.flatnonzero(self.labels == int(label))


def visibility_filter(box: BoxBEV, cloud: PointCloud,
                      radius: float = VISIBILITY_RADIUS) -> CornerSet:
    """Mark each footprint corner visible iff some point lies within ``radius``."""
    base = corners_from_box(box)
    if len(cloud) == 0:
        return CornerSet(tuple(
            Corner(c.index, c.x, c.y, c.z_g, visible=False) for c in base.corners
        ))
    px = cloud.points[:, 0]
    py = cloud.points[:, 1]
    r2 = radius * radius
    out = []
    for c in base.corners:
        dx = px - c.x
        dy = py - c.y
        visible = bool(((dx * dx + dy * dy) <= r2).any())
        out.append(Corner(c.index, c.x, c.y, c.z_g, visible=visible))
    return CornerSet(tuple(out))


def _bearing(a: Corner, b: Corner) -> float:
    return math.atan2(a.y - b.y, a.x - b.x)


def _distance(a: Corner, b: Corner) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def weak_to_full(ann: WeakAnnotation, *, l_prior: float | None = None,
                 w_prior: float | None = None) -> WeakToFullTarget:
    """Derive the box parameters a weak annotation determines.

    Two corners along one side give length and heading; two across the
    front or rear give width and heading (the indices orient the heading,
    so no flip ambiguity remains).  Three or more corners pin down length,
    width and heading via a rectangle fit.  A bare diagonal pair is
    Underdetermined unless both sizes are supplied, in which case the
    diagonal-plus-sizes decoding applies.  A single corner raises
    LocalizeOnly: it localizes the object but fixes no box parameter.
    """
    corners = ann.corners
    if len(corners) == 0:
        raise ValueError("annotation has no corners")
    if len(corners) == 1:
        raise LocalizeOnly(
            f"object {ann.object_id!r}: one corner localizes but fixes no parameter"
        )

    idx = ann.index_set
    if len(corners) == 2:
        if idx in (frozenset({0, 3}), frozenset({1, 2})):
            hi, lo = (0, 3) if idx == frozenset({0, 3}) else (1, 2)
            theta = _bearing(ann.corner(hi), ann.corner(lo))
            return WeakToFullTarget(
                TargetCase.SIDE, corners,
                l=_distance(ann.corner(hi), ann.corner(lo)), w=None,
                theta=canonicalize_yaw(theta),
            )
        if idx in (frozenset({0, 1}), frozenset({2, 3})):
            a, b = (0, 1) if idx == frozenset({0, 1}) else (3, 2)
            theta = _bearing(ann.corner(a), ann.corner(b)) - math.pi / 2.0
            return WeakToFullTarget(
                TargetCase.FRONT_REAR, corners,
                l=None, w=_distance(ann.corner(a), ann.corner(b)),
                theta=canonicalize_yaw(theta),
            )
        # Diagonal pair.
        if l_prior is None or w_prior is None:
            raise Underdetermined(
                f"object {ann.object_id!r}: a diagonal pair without both sizes "
                "leaves heading and sizes coupled"
            )
        first = min(idx)
        c1 = ann.corner(first)
        c2 = ann.corner((first + 2) % 4)
        code = EncodedBox(
            Scheme.DS_CORNER,
            (c1.x, c1.y, c2.x, c2.y, float(first), l_prior, w_prior),
            corner_index=first,
        )
        box = decode(code)
        return WeakToFullTarget(
            TargetCase.THREE_PLUS, corners, l=box.l, w=box.w, theta=box.theta
        )

    fit = fit_rectangle([(c.x, c.y, c.index) for c in corners])
    return WeakToFullTarget(
        TargetCase.THREE_PLUS, corners,
        l=fit.box.l, w=fit.box.w, theta=fit.box.theta,
    )


def foreground_mask(annotations: Iterable[WeakAnnotation] | WeakAnnotation,
                    cloud: PointCloud,
                    radius: float = FOREGROUND_RADIUS) -> MaskedPoints:
    """Label points within ``radius`` of any annotated corner as foreground."""
    if isinstance(annotations, WeakAnnotation):
        annotations = [annotations]
    labels = np.zeros(len(cloud), dtype=np.int8)
    if len(cloud):
        px = cloud.points[:, 0]
        py = cloud.points[:, 1]
        r2 = radius * radius
        hit = np.zeros(len(cloud), dtype=bool)
        for ann in annotations:
            for c in ann.corners:
                dx = px - c.x
                dy = py - c.y
                hit |= (dx * dx + dy * dy) <= r2
        labels[hit] = int(PointLabel.FOREGROUND)
    return MaskedPoints(labels)


def erasure_mask(box: BoxBEV, cloud: PointCloud, strategy: ErasureStrategy,
                 fraction: float = 0.5) -> MaskedPoints:
    """Partition a cloud against one box footprint with a region erased.

    center-box erases a fraction*l by fraction*w rectangle centered in the
    footprint; corner-blocks erases a fraction*(l/2) by fraction*(w/2)
    block at each corner, keeping the central cross.  Points outside the
    footprint are background; footprint points outside the erased region
    stay foreground.
    """
    strategy = ErasureStrategy(strategy)
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    labels = np.zeros(len(cloud), dtype=np.int8)
    if len(cloud) == 0:
        return MaskedPoints(labels)

    c, s = math.cos(box.theta), math.sin(box.theta)
    dx = cloud.points[:, 0] - box.x
    dy = cloud.points[:, 1] - box.y
    u = np.abs(c * dx + s * dy)
    v = np.abs(-s * dx + c * dy)
    hl, hw = box.l / 2.0, box.w / 2.0
    inside = (u <= hl) & (v <= hw)
    if strategy is ErasureStrategy.CENTER_BOX:
        erased = (u <= fraction * hl) & (v <= fraction * hw)
    else:
        erased = (u >= hl - fraction * hl) & (v >= hw - fraction * hw)
    labels[inside] = int(PointLabel.FOREGROUND)
    labels[inside & erased] = int(PointLabel.ERASED)
    return MaskedPoints(labels)


def annotation_weight(visible_count: int, full_count: int = 4) -> float:
    """Loss reweighting for an object annotated with ``visible_count`` corners.

    Scales the contribution of partially annotated objects back up to the
    fully annotated case; unannotatable objects (zero corners) get zero.
    """
    if full_count <= 0:
        raise ValueError(f"full_count must be positive, got {full_count}")
    if not 0 <= visible_count <= full_count:
        raise ValueError(
            f"visible_count must be in 0..{full_count}, got {visible_count}"
        )
    if visible_count == 0:
        return 0.0
    return full_count / visible_count


def labels_to_weak(boxes: Sequence[Box3D], cloud: PointCloud, calib=None,
                   image_boxes: Sequence[tuple[float, float, float, float] | None] | None = None,
                   *, frame: str = "", radius: float = VISIBILITY_RADIUS,
                   object_ids: Sequence[str] | None = None) -> list[WeakAnnotation]:
    """Reduce full 3D boxes to the weak annotations a human would produce.

    Keeps only the corners visible under the point-proximity rule, records
    the box bottom as each corner's ground height, and attaches image
    boxes by object order when given (or projects them through ``calib``
    when it is provided instead).  Objects with no visible corner are
    emitted with an empty corner list so callers can count and weight
    them.
    """
    if image_boxes is not None and len(image_boxes) != len(boxes):
        raise ValueError("image_boxes must align with boxes by position")
    if object_ids is not None and len(object_ids) != len(boxes):
        raise ValueError("object_ids must align with boxes by position")

    out = []
    for i, box in enumerate(boxes):
        vis = visibility_filter(box.bev, cloud, radius=radius)
        corners = tuple(
            Corner(c.index, c.x, c.y, z_g=box.z_bottom, visible=True)
            for c in vis.corners if c.visible
        )
        if image_boxes is not None:
            image_box = image_boxes[i]
        elif calib is not None:
            uv, _ = calib.project(box.corners_3d())
            image_box = (
                float(uv[:, 0].min()), float(uv[:, 1].min()),
                float(uv[:, 0].max()), float(uv[:, 1].max()),
            )
        else:
            image_box = None
        out.append(WeakAnnotation(
            frame=frame,
            object_id=object_ids[i] if object_ids is not None else str(i),
            corners=corners,
            image_box=image_box,
        ))
    return out
