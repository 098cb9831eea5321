"""Geometric recovery of boxes from corner evidence.

Pieces: per-index clustering of corner observations, least-squares
rectangle fitting, robust ground-plane estimation, and per-corner height
solving from an image-box top edge through the camera projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BehindCamera,
    Degenerate,
    DegenerateGeometry,
    InsufficientPoints,
    NonPositiveHeight,
    NoSolution,
)
from .geometry import CORNER_SIGNS, BoxBEV, Box3D, PointCloud, canonicalize_yaw

DEFAULT_EXTENT = 6.0  # meters; used where a box dimension is unobserved


@dataclass(frozen=True)
class CornerObservation:
    """A predicted or annotated corner: index, BEV position, confidence."""

    index: int
    x: float
    y: float
    score: float = 1.0

    def __post_init__(self):
        if self.index not in (0, 1, 2, 3):
            raise ValueError(f"corner index must be in 0..3, got {self.index}")


@dataclass(frozen=True)
class CornerCluster:
    """Score-weighted centroid of same-index observations."""

    index: int
    x: float
    y: float
    score: float
    member_ids: tuple[int, ...]


class ProposalSource(str, Enum):
    FITTED = "fitted"
    FALLBACK_REGION = "fallback-region"


@dataclass(frozen=True)
class Proposal:
    """A box hypothesis assembled from matched corner clusters."""

    bev: BoxBEV
    source: ProposalSource
    member_corner_ids: tuple[int, ...]
    clusters: tuple[CornerCluster, ...]
    underdetermined: str | None = None


@dataclass(frozen=True)
class RectangleFit:
    """Result of fit_rectangle: the box, what stayed unconstrained, and the residual."""

    box: BoxBEV
    underdetermined: str | None  # None | "l" | "w" | "theta"
    residual: float


CornerInput = Sequence[tuple[float, float, int]]


def _normalize_corners(corners: Iterable) -> list[tuple[float, float, int]]:
    out = []
    for item in corners:
        if isinstance(item, (tuple, list)):
            x, y, n = item
        else:
            x, y = item.x, item.y
            n = getattr(item, "index", None)
            if n is None:
                n = item.n
        n = int(n)
        if n not in (0, 1, 2, 3):
            raise ValueError(f"corner index must be in 0..3, got {n}")
        out.append((float(x), float(y), n))
    return out


def rectangle_objective(corners: CornerInput, box: BoxBEV) -> float:
    """Sum of squared distances between observations and the box's indexed corners."""
    total = 0.0
    for x, y, n in _normalize_corners(corners):
        cx, cy = box.corner_xy(n)
        total += (x - cx) ** 2 + (y - cy) ** 2
    return total


def _axis_solve(q: list[float], signs: list[float], prior: float | None,
                default: float) -> tuple[float, float, bool]:
    """1-D least squares q_i ~ u + s_i * half. Returns (u, size, unconstrained)."""
    n = len(q)
    t = sum(signs)
    if abs(t) == n:
        # All observations share one side: the size is unobserved.
        size = prior if prior is not None else default
        u = sum(q) / n - signs[0] * size / 2.0
        return u, size, True
    sq = sum(q)
    ssq = sum(s * v for s, v in zip(signs, q))
    det = n * n - t * t
    half = (n * ssq - t * sq) / det
    u = (sq - t * half) / n
    return u, 2.0 * half, False


def _solve_given_theta(pts, theta, l_prior, w_prior, default_extent):
    c, s = math.cos(theta), math.sin(theta)
    qx = [c * x + s * y for x, y, _ in pts]
    qy = [-s * x + c * y for x, y, _ in pts]
    sl = [CORNER_SIGNS[n][0] for _, _, n in pts]
    sw = [CORNER_SIGNS[n][1] for _, _, n in pts]
    u, length, free_l = _axis_solve(qx, sl, l_prior, default_extent)
    v, width, free_w = _axis_solve(qy, sw, w_prior, default_extent)
    if length <= 0.0 or width <= 0.0:
        return None
    cx = c * u - s * v
    cy = s * u + c * v
    return cx, cy, length, width, free_l, free_w


def _objective(pts, cx, cy, theta, length, width) -> float:
    c, s = math.cos(theta), math.sin(theta)
    total = 0.0
    for x, y, n in pts:
        ox = CORNER_SIGNS[n][0] * length / 2.0
        oy = CORNER_SIGNS[n][1] * width / 2.0
        ex = x - (cx + c * ox - s * oy)
        ey = y - (cy + s * ox + c * oy)
        total += ex * ex + ey * ey
    return total


def _theta_step(pts, cx, cy, length, width) -> float | None:
    """Optimal heading given center and sizes (closed form)."""
    acc_dot = 0.0
    acc_cross = 0.0
    for x, y, n in pts:
        vx = CORNER_SIGNS[n][0] * length / 2.0
        vy = CORNER_SIGNS[n][1] * width / 2.0
        dx = x - cx
        dy = y - cy
        acc_dot += vx * dx + vy * dy
        acc_cross += vx * dy - vy * dx
    if acc_dot == 0.0 and acc_cross == 0.0:
        return None
    return math.atan2(acc_cross, acc_dot)


def _bearing(a, b) -> float:
    return math.atan2(a[1] - b[1], a[0] - b[0])


def _theta_candidates(by_index, l_hint, w_hint) -> list[float]:
    cands = []
    if 0 in by_index and 3 in by_index:
        cands.append(_bearing(by_index[0], by_index[3]))
    if 1 in by_index and 2 in by_index:
        cands.append(_bearing(by_index[1], by_index[2]))
    if 0 in by_index and 1 in by_index:
        cands.append(_bearing(by_index[0], by_index[1]) - math.pi / 2.0)
    if 3 in by_index and 2 in by_index:
        cands.append(_bearing(by_index[3], by_index[2]) - math.pi / 2.0)
    if not cands:
        # Only a diagonal is available; split it using the size hints.
        if 0 in by_index and 2 in by_index:
            cands.append(_bearing(by_index[0], by_index[2]) - math.atan2(w_hint, l_hint))
        if 1 in by_index and 3 in by_index:
            cands.append(_bearing(by_index[1], by_index[3]) - math.atan2(-w_hint, l_hint))
    return cands


def fit_rectangle(corners: CornerInput, *, l_prior: float | None = None,
                  w_prior: float | None = None,
                  default_extent: float = DEFAULT_EXTENT,
                  max_iterations: int = 100, tol: float = 1e-12) -> RectangleFit:
    """Least-squares rectangle through indexed corner observations.

    Minimizes the summed squared distance between each observation and the
    corner of matching index.  Heading candidates come from edge and
    diagonal bearings; center and sizes are closed-form given a heading,
    and the heading is refined by alternation until the objective change
    drops below ``tol`` or ``max_iterations`` is hit.

    With exactly two adjacent corners one dimension is unobserved: it is
    filled from the matching prior if given, else ``default_extent``, and
    flagged in the result.  A bare diagonal pair leaves the heading itself
    unconstrained (flagged "theta"); the size hints orient it.
    """
    pts = _normalize_corners(corners)
    if len(pts) < 2:
        raise ValueError("fit_rectangle needs at least 2 corners")
    seen = [n for _, _, n in pts]
    if len(set(seen)) != len(seen):
        raise ValueError("fit_rectangle needs corners with distinct indices")

    span = max(
        math.hypot(a[0] - b[0], a[1] - b[1]) for a in pts for b in pts
    )
    if span < 1e-6:
        raise Degenerate(f"corner observations span only {span:.3g} m")

    by_index = {n: (x, y) for x, y, n in pts}
    l_hint = l_prior if l_prior is not None else default_extent
    w_hint = w_prior if w_prior is not None else default_extent
    diagonal_only = set(seen) in ({0, 2}, {1, 3})

    best = None
    for theta0 in _theta_candidates(by_index, l_hint, w_hint):
        theta = theta0
        prev_obj = None
        state = None
        for _ in range(max_iterations):
            sol = _solve_given_theta(pts, theta, l_prior, w_prior, default_extent)
            if sol is None:
                break
            cx, cy, length, width, free_l, free_w = sol
            obj = _objective(pts, cx, cy, theta, length, width)
            state = (obj, cx, cy, length, width, theta, free_l, free_w)
            if prev_obj is not None and abs(prev_obj - obj) < tol:
                break
            prev_obj = obj
            theta_new = _theta_step(pts, cx, cy, length, width)
            if theta_new is None or theta_new == theta:
                break
            theta = theta_new
        if state is not None and (best is None or state[0] < best[0]):
            best = state

    if best is None:
        raise Degenerate("no feasible rectangle for the given corners")

    obj, cx, cy, length, width, theta, free_l, free_w = best
    if diagonal_only:
        flag = "theta"
    elif free_l:
        flag = "l"
    elif free_w:
        flag = "w"
    else:
        flag = None
    box = BoxBEV(cx, cy, length, width, canonicalize_yaw(theta))
    return RectangleFit(box=box, underdetermined=flag, residual=obj)


def cluster_corners(observations: Sequence[CornerObservation], *,
                    cluster_radius: float = 0.5, match_radius: float = 6.0,
                    fallback_extent: float = DEFAULT_EXTENT,
                    max_partners: int = 3) -> list[Proposal]:
    """Group corner observations into box proposals.

    Same-index observations within ``cluster_radius`` of a cluster's
    score-weighted centroid agglomerate.  Each cluster then considers its
    ``max_partners`` nearest clusters of other indices within
    ``match_radius``; candidate pairs merge greedily by distance (ties
    broken by higher summed score, then lower corner index) as long as the
    merged set keeps one cluster per index.  Matched sets of two or more
    corners are fitted; leftover singletons become fallback regions of
    ``fallback_extent`` square meters centered on the cluster.

    The result does not depend on the order of the input list.
    """
    if not observations:
        return []
    order = sorted(
        range(len(observations)),
        key=lambda i: (
            -observations[i].score,
            observations[i].x,
            observations[i].y,
            observations[i].index,
        ),
    )
    canonical = [observations[i] for i in order]

    # Greedy agglomeration over the canonical order.
    acc: list[dict] = []
    per_index: dict[int, list[int]] = {0: [], 1: [], 2: [], 3: []}
    for cid, ob in enumerate(canonical):
        best_j = None
        best_d = None
        for j in per_index[ob.index]:
            cl = acc[j]
            d = math.hypot(ob.x - cl["sx"] / cl["w"], ob.y - cl["sy"] / cl["w"])
            if d <= cluster_radius and (best_d is None or d < best_d):
                best_j, best_d = j, d
        if best_j is None:
            acc.append({"index": ob.index, "sx": ob.x * ob.score,
                        "sy": ob.y * ob.score, "w": ob.score, "members": [cid]})
            per_index[ob.index].append(len(acc) - 1)
        else:
            cl = acc[best_j]
            cl["sx"] += ob.x * ob.score
            cl["sy"] += ob.y * ob.score
            cl["w"] += ob.score
            cl["members"].append(cid)

    clusters = [
        CornerCluster(
            index=cl["index"],
            x=cl["sx"] / cl["w"],
            y=cl["sy"] / cl["w"],
            score=cl["w"],
            member_ids=tuple(sorted(cl["members"])),
        )
        for cl in acc
    ]

    # Candidate edges: each cluster's nearest few clusters of other indices.
    edges: dict[tuple[int, int], float] = {}
    for i, a in enumerate(clusters):
        dists = []
        for j, b in enumerate(clusters):
            if j == i or b.index == a.index:
                continue
            d = math.hypot(a.x - b.x, a.y - b.y)
            if d <= match_radius:
                dists.append((d, j))
        dists.sort()
        for d, j in dists[:max_partners]:
            key = (min(i, j), max(i, j))
            if key not in edges or d < edges[key]:
                edges[key] = d

    ranked = sorted(
        edges.items(),
        key=lambda kv: (
            kv[1],
            -(clusters[kv[0][0]].score + clusters[kv[0][1]].score),
            min(clusters[kv[0][0]].index, clusters[kv[0][1]].index),
            kv[0],
        ),
    )

    parent = list(range(len(clusters)))
    masks = [1 << c.index for c in clusters]

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (i, j), _d in ranked:
        ri, rj = find(i), find(j)
        if ri == rj or (masks[ri] & masks[rj]):
            continue
        parent[rj] = ri
        masks[ri] |= masks[rj]

    groups: dict[int, list[int]] = {}
    for i in range(len(clusters)):
        groups.setdefault(find(i), []).append(i)

    proposals = []
    for members in groups.values():
        group = sorted(members, key=lambda i: clusters[i].index)
        ids = tuple(sorted(cid for i in group for cid in clusters[i].member_ids))
        if len(group) == 1:
            c = clusters[group[0]]
            proposals.append(Proposal(
                bev=BoxBEV(c.x, c.y, fallback_extent, fallback_extent, 0.0),
                source=ProposalSource.FALLBACK_REGION,
                member_corner_ids=ids,
                clusters=(c,),
            ))
        else:
            fit = fit_rectangle(
                [(clusters[i].x, clusters[i].y, clusters[i].index) for i in group],
                default_extent=fallback_extent,
            )
            proposals.append(Proposal(
                bev=fit.box,
                source=ProposalSource.FITTED,
                member_corner_ids=ids,
                clusters=tuple(clusters[i] for i in group),
                underdetermined=fit.underdetermined,
            ))
    proposals.sort(key=lambda p: (p.bev.x, p.bev.y, p.source.value))
    return proposals


@dataclass(frozen=True)
class GroundPlane:
    """Plane a*x + b*y + c*z + d = 0 with unit normal and c > 0."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        norm = math.sqrt(self.a * self.a + self.b * self.b + self.c * self.c)
        if not (abs(norm - 1.0) < 1e-9):
            raise ValueError("ground plane normal must be unit length")
        if not self.c > 0.0:
            raise ValueError("ground plane normal must point up (c > 0)")

    def height_at(self, x: float, y: float) -> float:
        return -(self.a * x + self.b * y + self.d) / self.c

    def distances(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return np.abs(pts[:, 0] * self.a + pts[:, 1] * self.b
                      + pts[:, 2] * self.c + self.d)


def _as_xyz(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.xyz
    pts = np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] < 3:
        raise ValueError("expected an (N, 3) or (N, 4) point array")
    return pts[:, :3]


def _plane_from_inliers(pts: np.ndarray) -> tuple[np.ndarray, float]:
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    normal = vt[2]
    return normal, float(-normal @ centroid)


def fit_ground_plane(cloud, *, iterations: int = 200, inlier_tol: float = 0.15,
                     seed: int = 0) -> GroundPlane:
    """RANSAC plane fit with a least-squares refinement on the inliers.

    Deterministic for a fixed seed.  Raises InsufficientPoints for clouds
    of fewer than 3 points and DegenerateGeometry when no non-degenerate
    plane hypothesis exists (e.g. all points collinear).
    """
    pts = _as_xyz(cloud)
    n = pts.shape[0]
    if n < 3:
        raise InsufficientPoints(f"plane fit needs at least 3 points, got {n}")

    rng = np.random.default_rng(seed)
    best_count = 0
    best: tuple[np.ndarray, float] | None = None
    for _ in range(iterations):
        idx = rng.choice(n, size=3, replace=False)
        p0, p1, p2 = pts[idx]
        normal = np.cross(p1 - p0, p2 - p0)
        norm = float(np.linalg.norm(normal))
        if norm <= 1e-12:
            continue
        normal = normal / norm
        d = float(-normal @ p0)
        dist = np.abs(pts @ normal + d)
        count = int((dist <= inlier_tol).sum())
        if count > best_count:
            best_count = count
            best = (normal, d)

    if best is None:
        raise DegenerateGeometry("no non-degenerate plane hypothesis found")

    normal, d = best
    for _ in range(2):
        dist = np.abs(pts @ normal + d)
        inliers = pts[dist <= inlier_tol]
        if inliers.shape[0] < 3:
            break
        normal, d = _plane_from_inliers(inliers)

    if normal[2] < 0.0:
        normal, d = -normal, -d
    if abs(normal[2]) < 1e-9:
        raise DegenerateGeometry("best-fit plane is vertical; not a ground plane")
    return GroundPlane(float(normal[0]), float(normal[1]), float(normal[2]), d)


@dataclass(frozen=True)
class CornerHeights:
    """Per-corner height candidates and the selected top height."""

    candidates: tuple[float, ...]
    z_top: float


def solve_corner_heights(bev_corners: Sequence[tuple[float, float]], projection,
                         v_top: float) -> CornerHeights:
    """Heights at which each footprint corner projects onto an image row.

    For a 3x4 projection P and a corner column (x, y), solves
    row_v(P) . (x, y, z, 1) = v_top * row_w(P) . (x, y, z, 1) for z.  The
    overall projective scale cancels in the division, so the result is
    invariant to rescaling P.  The candidate for the corner that actually
    produced the image's top edge is the smallest one, hence z_top is the
    minimum over candidates.

    Raises NoSolution when the constraint row has no vertical component
    and BehindCamera when a solved corner has non-positive projective
    depth.
    """
    P = np.asarray(getattr(projection, "P", projection), dtype=np.float64)
    if P.shape != (3, 4):
        raise ValueError(f"projection must be 3x4, got {P.shape}")
    row = P[1] - float(v_top) * P[2]
    a = float(row[2])
    if abs(a) <= 1e-12 * max(1.0, float(np.max(np.abs(row)))):
        raise NoSolution("projection row has no vertical component at this image row")

    candidates = []
    for x, y in bev_corners:
        b = row[0] * float(x) + row[1] * float(y) + row[3]
        z = -b / a
        depth = P[2, 0] * x + P[2, 1] * y + P[2, 2] * z + P[2, 3]
        if depth <= 0.0:
            raise BehindCamera(
                f"corner ({x:.2f}, {y:.2f}) has projective depth {depth:.3g}"
            )
        candidates.append(float(z))
    return CornerHeights(tuple(candidates), min(candidates))


def assemble_box3d(bev: BoxBEV, z_top: float, ground: GroundPlane) -> Box3D:
    """Lift a BEV box to 3D using a recovered top height and the ground plane."""
    z_bottom = ground.height_at(bev.x, bev.y)
    h = z_top - z_bottom
    if h <= 0.0:
        raise NonPositiveHeight(
            f"top height {z_top:.3f} does not clear ground {z_bottom:.3f}"
        )
    return Box3D(bev.x, bev.y, z_bottom + h / 2.0, bev.l, bev.w, h, bev.theta)
