"""Oriented-box geometry on the ground plane and in 3D.

Conventions used everywhere in this package:

- Sensor frame: x forward, y left, z up.  The bird's-eye view (BEV) is the
  (x, y) plane and yaw is measured counterclockwise from +x.
- Box corners are indexed clockwise starting at the front-left corner.
  In the object-local frame (heading along +x) the corners sit at

      0: (+l/2, +w/2)   front-left
      1: (+l/2, -w/2)   front-right
      2: (-l/2, -w/2)   back-right
      3: (-l/2, +w/2)   back-left

- Yaw angles are canonicalized to (-pi, pi]; -pi maps to +pi.
- A 3D box is its BEV footprint plus a vertical extent centered at z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFinite, NotARectangle

TWO_PI = 2.0 * math.pi

# (sign along heading, sign across heading) for corner indices 0..3.
CORNER_SIGNS = ((1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0))


def canonicalize_yaw(theta: float) -> float:
    """Map an angle to the interval (-pi, pi], sending -pi to +pi."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise NonFinite(f"yaw must be finite, got {theta!r}")
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def yaw_distance(a: float, b: float) -> float:
    """Absolute difference between two yaw angles modulo 2*pi."""
    return abs(math.remainder(a - b, TWO_PI))


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise NonFinite(f"{name} must be finite, got {value!r}")
    return value


def _check_positive(name: str, value: float) -> float:
    value = _check_finite(name, value)
    if value <= 0.0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value


@dataclass(frozen=True)
class BoxBEV:
    """Oriented rectangle in the BEV plane: center, length, width, yaw.

    Length runs along the heading, width across it.  Yaw is canonicalized
    on construction; lengths must be strictly positive.
    """

    x: float
    y: float
    l: float
    w: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", _check_finite("x", self.x))
        object.__setattr__(self, "y", _check_finite("y", self.y))
        object.__setattr__(self, "l", _check_positive("l", self.l))
        object.__setattr__(self, "w", _check_positive("w", self.w))
        object.__setattr__(self, "theta", canonicalize_yaw(self.theta))

    @property
    def area(self) -> float:
        return self.l * self.w

    def corner_xy(self, index: int) -> tuple[float, float]:
        """World coordinates of one indexed corner."""
        sl, sw = CORNER_SIGNS[index]
        c, s = math.cos(self.theta), math.sin(self.theta)
        ox, oy = sl * self.l / 2.0, sw * self.w / 2.0
        return (self.x + c * ox - s * oy, self.y + s * ox + c * oy)

    def corner_array(self) -> list[tuple[float, float]]:
        """All four corners in index order (clockwise from front-left)."""
        return [self.corner_xy(i) for i in range(4)]


@dataclass(frozen=True)
class Box3D:
    """Upright 3D box: BEV footprint plus vertical extent centered at z."""

    x: float
    y: float
    z: float
    l: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", _check_finite("x", self.x))
        object.__setattr__(self, "y", _check_finite("y", self.y))
        object.__setattr__(self, "z", _check_finite("z", self.z))
        object.__setattr__(self, "l", _check_positive("l", self.l))
        object.__setattr__(self, "w", _check_positive("w", self.w))
        object.__setattr__(self, "h", _check_positive("h", self.h))
        object.__setattr__(self, "theta", canonicalize_yaw(self.theta))

    @property
    def bev(self) -> BoxBEV:
        return BoxBEV(self.x, self.y, self.l, self.w, self.theta)

    @property
    def z_bottom(self) -> float:
        return self.z - self.h / 2.0

    @property
    def z_top(self) -> float:
        return self.z + self.h / 2.0

    @property
    def volume(self) -> float:
        return self.l * self.w * self.h

    @staticmethod
    def from_bev(bev: BoxBEV, z: float, h: float) -> "Box3D":
        return Box3D(bev.x, bev.y, z, bev.l, bev.w, h, bev.theta)

    def corners_3d(self) -> np.ndarray:
        """The eight box corners, shape (8, 3): bottom ring then top ring."""
        ring = self.bev.corner_array()
        out = np.empty((8, 3), dtype=np.float64)
        for i, (cx, cy) in enumerate(ring):
            out[i] = (cx, cy, self.z_bottom)
            out[i + 4] = (cx, cy, self.z_top)
        return out


@dataclass(frozen=True)
class Corner:
    """One indexed BEV corner with its ground height and visibility flag."""

    index: int
    x: float
    y: float
    z_g: float = 0.0
    visible: bool = True

    def __post_init__(self):
        if self.index not in (0, 1, 2, 3):
            raise ValueError(f"corner index must be in 0..3, got {self.index}")


@dataclass(frozen=True)
class CornerSet:
    """The four indexed corners of one box footprint."""

    corners: tuple[Corner, Corner, Corner, Corner]

    def __post_init__(self):
        if sorted(c.index for c in self.corners) != [0, 1, 2, 3]:
            raise ValueError("corner set must contain each index 0..3 exactly once")

    def by_index(self, index: int) -> Corner:
        for c in self.corners:
            if c.index == index:
                return c
        raise ValueError(f"no corner with index {index}")

    def visible(self) -> tuple[Corner, ...]:
        return tuple(c for c in self.corners if c.visible)


@dataclass(frozen=True)
class PointCloud:
    """Point cloud of shape (N, 4): x, y, z, reflectance."""

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ValueError(f"point cloud must have shape (N, 4), got {pts.shape}")
        if pts.size and not np.isfinite(pts).all():
            raise NonFinite("point cloud contains non-finite values")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, :2]

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]


def corners_from_box(box: BoxBEV) -> CornerSet:
    """Indexed footprint corners of a BEV box, all marked visible, z_g = 0."""
    corners = tuple(
        Corner(index=i, x=cx, y=cy) for i, (cx, cy) in enumerate(box.corner_array())
    )
    return CornerSet(corners)


def box_from_corners(corners: CornerSet, tol: float = 1e-6) -> BoxBEV:
    """Recover the BEV box whose indexed corners are given.

    Exact inverse of corners_from_box for true rectangles.  Raises
    NotARectangle when the reconstruction residual (max corner distance
    between input and the rebuilt rectangle) exceeds ``tol`` meters.
    """
    if len(corners.corners) != 4:
        raise ValueError("box_from_corners needs all four corners")
    if any(not c.visible for c in corners.corners):
        raise ValueError("box_from_corners needs all four corners visible")
    p = [corners.by_index(i) for i in range(4)]

    # Heading estimates: two length edges, two width edges rotated back.
    candidates = [
        math.atan2(p[0].y - p[3].y, p[0].x - p[3].x),
        math.atan2(p[1].y - p[2].y, p[1].x - p[2].x),
        math.atan2(p[0].y - p[1].y, p[0].x - p[1].x) - math.pi / 2.0,
        math.atan2(p[3].y - p[2].y, p[3].x - p[2].x) - math.pi / 2.0,
    ]
    theta = math.atan2(
        sum(math.sin(t) for t in candidates), sum(math.cos(t) for t in candidates)
    )

    length = (math.dist((p[0].x, p[0].y), (p[3].x, p[3].y))
              + math.dist((p[1].x, p[1].y), (p[2].x, p[2].y))) / 2.0
    width = (math.dist((p[0].x, p[0].y), (p[1].x, p[1].y))
             + math.dist((p[3].x, p[3].y), (p[2].x, p[2].y))) / 2.0
    cx = sum(c.x for c in p) / 4.0
    cy = sum(c.y for c in p) / 4.0

    if length <= tol or width <= tol:
        raise NotARectangle(
            f"corner set collapses to a degenerate rectangle ({length:.3g} x {width:.3g})"
        )
    box = BoxBEV(cx, cy, length, width, theta)
    residual = max(
        math.dist(box.corner_xy(i), (p[i].x, p[i].y)) for i in range(4)
    )
    if residual > tol:
        raise NotARectangle(
            f"corners deviate from a rectangle by {residual:.3g} m (tolerance {tol:g})"
        )
    return box


def _clip_polygon(subject: list[tuple[float, float]],
                  clip: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Clip a convex polygon by the half-planes of a clockwise convex polygon."""
    out = subject
    n = len(clip)
    for i in range(n):
        if len(out) < 3:
            return []
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        inp = out
        out = []
        vals = [ex * (py - ay) - ey * (px - ax) for px, py in inp]
        m = len(inp)
        for j in range(m):
            cur = inp[j]
            nxt = inp[(j + 1) % m]
            vc = vals[j]
            vn = vals[(j + 1) % m]
            if vc <= 0.0:
                out.append(cur)
            if (vc < 0.0 < vn) or (vn < 0.0 < vc):
                t = vc / (vc - vn)
                out.append((cur[0] + t * (nxt[0] - cur[0]),
                            cur[1] + t * (nxt[1] - cur[1])))
    return out


def _polygon_area(poly: list[tuple[float, float]]) -> float:
    if len(poly) < 3:
        return 0.0
    acc = 0.0
    m = len(poly)
    for i in range(m):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % m]
        acc += x0 * y1 - x1 * y0
    return abs(acc) / 2.0


def intersection_area(a: BoxBEV, b: BoxBEV) -> float:
    """Area of the overlap of two oriented rectangles."""
    # Quick reject on circumscribed circles.
    ra = math.hypot(a.l, a.w) / 2.0
    rb = math.hypot(b.l, b.w) / 2.0
    if math.hypot(a.x - b.x, a.y - b.y) > ra + rb:
        return 0.0
    return _polygon_area(_clip_polygon(a.corner_array(), b.corner_array()))


def bev_iou(a: BoxBEV, b: BoxBEV) -> float:
    """Intersection over union of two oriented BEV rectangles."""
    if a == b:
        return 1.0
    inter = intersection_area(a, b)
    if inter <= 0.0:
        return 0.0
    union = a.area + b.area - inter
    if union <= 0.0:
        return 1.0
    return min(1.0, inter / union)


def iou3d(a: Box3D, b: Box3D) -> float:
    """3D IoU of two upright boxes: BEV overlap times vertical overlap."""
    if a == b:
        return 1.0
    z_overlap = min(a.z_top, b.z_top) - max(a.z_bottom, b.z_bottom)
    if z_overlap <= 0.0:
        return 0.0
    inter = intersection_area(a.bev, b.bev) * z_overlap
    if inter <= 0.0:
        return 0.0
    union = a.volume + b.volume - inter
    if union <= 0.0:
        return 1.0
    return min(1.0, inter / union)
