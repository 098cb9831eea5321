"""End-to-end recovery of full boxes from weak annotations.

This is the shared flow behind the `recover` command and the service's
recover endpoint: fit the ground plane from the frame's cloud, fit a BEV
rectangle through the annotated corners, lift it to 3D with the image
box's top edge, and report anything that kept the result partial as a
reason code.

Also houses the on-disk dataset layout (velodyne/, calib/, label_2/,
annotations/ under one root) used by the CLI and the service.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import (
    BehindCamera,
    Degenerate,
    DegenerateGeometry,
    InsufficientPoints,
    LocalizeOnly,
    NonPositiveHeight,
    NoSolution,
    Underdetermined,
)
from .geometry import Box3D, BoxBEV, PointCloud
from .kitti_io import (
    Calib,
    KittiLabel,
    load_point_cloud_file,
    parse_label_file,
    read_annotation_file,
    write_annotation_file,
)
from .recovery import GroundPlane, assemble_box3d, fit_ground_plane, fit_rectangle, solve_corner_heights
from .weak_labels import WeakAnnotation, annotation_weight, weak_to_full


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome for one annotation: a box when possible, a reason when not.

    status is "ok" when every box parameter is pinned down and the 3D lift
    succeeded, "partial" when a BEV box exists but something was defaulted
    or the lift failed, and "failed" when no box could be produced.
    """

    frame: str
    object_id: str
    status: str
    n_corners: int
    weight: float
    reason: str | None = None
    detail: str | None = None
    case: str | None = None
    bev: BoxBEV | None = None
    box3d: Box3D | None = None


def _classify(ann: WeakAnnotation, l_prior, w_prior) -> str | None:
    try:
        return weak_to_full(ann, l_prior=l_prior, w_prior=w_prior).case.value
    except (LocalizeOnly, Underdetermined, ValueError):
        return None


def recover_annotation(ann: WeakAnnotation, *, calib: Calib | None = None,
                       ground: GroundPlane | None = None,
                       l_prior: float | None = None,
                       w_prior: float | None = None) -> RecoveryResult:
    """Recover as much of a box as one weak annotation supports."""
    n = len(ann.corners)
    weight = annotation_weight(n)
    base = dict(frame=ann.frame, object_id=ann.object_id, n_corners=n,
                weight=weight, case=_classify(ann, l_prior, w_prior))

    if n == 0:
        return RecoveryResult(status="failed", reason="EmptyAnnotation",
                              detail="annotation has no corners", **base)
    if n == 1:
        c = ann.corners[0]
        return RecoveryResult(
            status="failed", reason="LocalizeOnly",
            detail=f"single corner {c.index} at ({c.x:.2f}, {c.y:.2f}) "
                   "fixes no box parameter", **base)

    try:
        fit = fit_rectangle([(c.x, c.y, c.index) for c in ann.corners],
                            l_prior=l_prior, w_prior=w_prior)
    except Degenerate as exc:
        return RecoveryResult(status="failed", reason="Degenerate",
                              detail=str(exc), **base)

    flag = fit.underdetermined
    determined = (
        flag is None
        or (flag == "l" and l_prior is not None)
        or (flag == "w" and w_prior is not None)
        or (flag == "theta" and l_prior is not None and w_prior is not None)
    )
    pending = None
    if not determined:
        pending = ("Underdetermined",
                   f"box {flag} is unobserved and no prior was given")

    box3d = None
    if ground is None:
        pending = pending or ("NoGroundPlane",
                              "no ground plane; cannot place the box bottom")
    elif ann.image_box is None:
        pending = pending or ("NoImageBox",
                              "no image box; top height is unconstrained")
    elif calib is None:
        pending = pending or ("NoCalibration",
                              "no projection; cannot use the image box")
    else:
        try:
            heights = solve_corner_heights(
                [fit.box.corner_xy(i) for i in range(4)], calib,
                v_top=ann.image_box[1])
            box3d = assemble_box3d(fit.box, heights.z_top, ground)
        except (BehindCamera, NoSolution, NonPositiveHeight) as exc:
            pending = pending or (type(exc).__name__, str(exc))

    if pending is not None:
        return RecoveryResult(status="partial", reason=pending[0],
                              detail=pending[1], bev=fit.box, box3d=box3d,
                              **base)
    return RecoveryResult(status="ok", bev=fit.box, box3d=box3d, **base)


def frame_ground(cloud: PointCloud, *, seed: int = 0) -> GroundPlane | None:
    """Ground plane of a frame cloud, or None when the cloud cannot support one."""
    try:
        return fit_ground_plane(cloud, seed=seed)
    except (InsufficientPoints, DegenerateGeometry):
        return None


def recover_frame(annotations, cloud: PointCloud | None, calib: Calib | None,
                  *, l_prior: float | None = None, w_prior: float | None = None,
                  seed: int = 0) -> list[RecoveryResult]:
    ground = frame_ground(cloud, seed=seed) if cloud is not None else None
    return [
        recover_annotation(ann, calib=calib, ground=ground,
                           l_prior=l_prior, w_prior=w_prior)
        for ann in annotations
    ]


def result_to_record(res: RecoveryResult) -> dict:
    """JSON-able report record; box fields spelled out for downstream tools."""
    def box_bev(b: BoxBEV | None):
        if b is None:
            return None
        return {"x": b.x, "y": b.y, "l": b.l, "w": b.w, "theta": b.theta}

    def box_3d(b: Box3D | None):
        if b is None:
            return None
        return {"x": b.x, "y": b.y, "z": b.z, "l": b.l, "w": b.w, "h": b.h,
                "theta": b.theta}

    return {
        "frame": res.frame,
        "object": res.object_id,
        "status": res.status,
        "reason": res.reason,
        "detail": res.detail,
        "case": res.case,
        "n_corners": res.n_corners,
        "weight": res.weight,
        "bev": box_bev(res.bev),
        "box3d": box_3d(res.box3d),
    }


class Dataset:
    """Directory-backed frame store: velodyne/, calib/, label_2/, annotations/."""

    def __init__(self, root):
        self.root = Path(root)
        self._ground_cache: dict[str, GroundPlane | None] = {}

    @property
    def velodyne_dir(self) -> Path:
        return self.root / "velodyne"

    @property
    def calib_dir(self) -> Path:
        return self.root / "calib"

    @property
    def label_dir(self) -> Path:
        return self.root / "label_2"

    @property
    def annotation_dir(self) -> Path:
        return self.root / "annotations"

    def frames(self) -> list[str]:
        if not self.velodyne_dir.is_dir():
            return []
        return sorted(p.stem for p in self.velodyne_dir.glob("*.bin"))

    def has_frame(self, frame: str) -> bool:
        return (self.velodyne_dir / f"{frame}.bin").is_file()

    def cloud(self, frame: str) -> PointCloud:
        return load_point_cloud_file(self.velodyne_dir / f"{frame}.bin")

    def calib(self, frame: str) -> Calib:
        return Calib.from_kitti_text((self.calib_dir / f"{frame}.txt").read_text())

    def labels(self, frame: str) -> list[KittiLabel]:
        return parse_label_file((self.label_dir / f"{frame}.txt").read_text())

    def annotation_path(self, frame: str) -> Path:
        return self.annotation_dir / f"{frame}.jsonl"

    def annotations(self, frame: str) -> list[WeakAnnotation]:
        path = self.annotation_path(frame)
        if not path.is_file():
            return []
        return read_annotation_file(path)

    def write_annotations(self, frame: str, annotations) -> None:
        write_annotation_file(self.annotation_path(frame), annotations)

    def ground(self, frame: str, *, seed: int = 0) -> GroundPlane | None:
        if frame not in self._ground_cache:
            self._ground_cache[frame] = frame_ground(self.cloud(frame), seed=seed)
        return self._ground_cache[frame]
