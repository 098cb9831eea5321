"""HTTP annotation service over a dataset directory.

Read endpoints serve frame lists, decimated BEV points, and stored
annotations; PUT persists annotations atomically; POST /recover runs the
library recovery flow on a partial annotation so the annotator can
overlay the implied box live.  Cloud and calibration files are never
mutated.
"""

from __future__ import annotations

import math
import threading

from fastapi import FastAPI, HTTPException, Query

from ..errors import MissingComponent
from ..geometry import Corner
from ..kitti_io import annotation_to_record
from ..pipeline import Dataset, recover_annotation, result_to_record
from ..weak_labels import WeakAnnotation
from .schemas import (
    AnnotationsPayload,
    AnnotationsResponse,
    BevResponse,
    FramesResponse,
    RecoverRequest,
    RecoverResponse,
)

DEFAULT_DECIMATE = 50_000


def create_app(data_dir) -> FastAPI:
    dataset = Dataset(data_dir)
    app = FastAPI(title="corner annotation service")
    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def frame_lock(frame: str) -> threading.Lock:
        with locks_guard:
            return locks.setdefault(frame, threading.Lock())

    def require_frame(frame: str) -> None:
        if not dataset.has_frame(frame):
            raise HTTPException(status_code=404, detail=f"unknown frame {frame!r}")

    def calib_or_none(frame: str):
        try:
            return dataset.calib(frame)
        except (FileNotFoundError, MissingComponent):
            return None

    @app.get("/frames", response_model=FramesResponse)
    def frames() -> FramesResponse:
        return FramesResponse(frames=dataset.frames())

    @app.get("/frames/{frame}/bev", response_model=BevResponse)
    def bev(frame: str,
            decimate: int = Query(DEFAULT_DECIMATE, ge=1)) -> BevResponse:
        require_frame(frame)
        xy = dataset.cloud(frame).xy
        total = len(xy)
        # Deterministic stride sampling, no seed involved.
        stride = max(1, math.ceil(total / decimate))
        kept = xy[::stride]
        return BevResponse(
            frame=frame, total=total, count=len(kept),
            x=[float(v) for v in kept[:, 0]],
            y=[float(v) for v in kept[:, 1]],
        )

    @app.get("/frames/{frame}/annotations", response_model=AnnotationsResponse)
    def get_annotations(frame: str) -> AnnotationsResponse:
        require_frame(frame)
        records = [annotation_to_record(a) for a in dataset.annotations(frame)]
        return AnnotationsResponse(frame=frame, records=records)

    @app.put("/frames/{frame}/annotations", response_model=AnnotationsResponse)
    def put_annotations(frame: str, payload: AnnotationsPayload) -> AnnotationsResponse:
        require_frame(frame)
        annotations = []
        for i, rec in enumerate(payload.records):
            if rec.frame != frame:
                raise HTTPException(
                    status_code=422,
                    detail=f"record {i} is for frame {rec.frame!r}, not {frame!r}",
                )
            try:
                annotations.append(WeakAnnotation(
                    frame=rec.frame,
                    object_id=rec.object,
                    corners=tuple(
                        Corner(c.n, c.x, c.y, z_g=c.zg) for c in rec.corners
                    ),
                    image_box=rec.image_box,
                ))
            except ValueError as exc:
                raise HTTPException(status_code=422,
                                    detail=f"record {i}: {exc}") from exc
        with frame_lock(frame):
            dataset.write_annotations(frame, annotations)
        return AnnotationsResponse(
            frame=frame, records=[annotation_to_record(a) for a in annotations],
        )

    @app.post("/frames/{frame}/recover", response_model=RecoverResponse)
    def recover(frame: str, body: RecoverRequest) -> RecoverResponse:
        require_frame(frame)
        ground = dataset.ground(frame)
        filled = [
            Corner(
                c.n, c.x, c.y,
                z_g=c.zg if c.zg is not None
                else (ground.height_at(c.x, c.y) if ground is not None else 0.0),
            )
            for c in body.corners
        ]
        try:
            ann = WeakAnnotation(frame=frame, object_id=body.object,
                                 corners=tuple(filled), image_box=body.image_box)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        result = recover_annotation(
            ann, calib=calib_or_none(frame), ground=ground,
            l_prior=body.l_prior, w_prior=body.w_prior,
        )
        record = result_to_record(result)
        return RecoverResponse(
            **record,
            corners=[{"n": c.index, "x": c.x, "y": c.y, "zg": c.z_g}
                     for c in filled],
        )

    return app
