"""Request/response bodies for the annotation service.

These mirror the JSON-lines interchange records so a PUT round-trips
byte-identically through the on-disk format.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator

Finite = Field(allow_inf_nan=False)


def _distinct_indices(corners):
    indices = [c.n for c in corners]
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate corner indices: {sorted(indices)}")
    return corners


def _ordered_image_box(box):
    if box is None:
        return None
    u0, v0, u1, v1 = box
    if not (u0 < u1 and v0 < v1):
        raise ValueError(f"image box must be ordered, got {box}")
    return box


class CornerIn(BaseModel):
    """A clicked corner; ground height is filled by the service when absent."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=0, le=3)
    x: float = Finite
    y: float = Finite
    zg: float | None = Field(default=None, allow_inf_nan=False)


class CornerOut(BaseModel):
    n: int
    x: float
    y: float
    zg: float


class RecoverRequest(BaseModel):
    """A partial annotation to recover a box from, for live overlay."""

    model_config = ConfigDict(extra="forbid")

    object: str = "live"
    corners: list[CornerIn] = Field(max_length=4)
    image_box: tuple[float, float, float, float] | None = None
    l_prior: float | None = Field(default=None, gt=0, allow_inf_nan=False)
    w_prior: float | None = Field(default=None, gt=0, allow_inf_nan=False)

    _indices = field_validator("corners")(_distinct_indices)
    _box = field_validator("image_box")(_ordered_image_box)


class BoxBEVOut(BaseModel):
    x: float
    y: float
    l: float
    w: float
    theta: float


class Box3DOut(BaseModel):
    x: float
    y: float
    z: float
    l: float
    w: float
    h: float
    theta: float


class RecoverResponse(BaseModel):
    frame: str
    object: str
    status: str
    reason: str | None
    detail: str | None
    case: str | None
    n_corners: int
    weight: float
    bev: BoxBEVOut | None
    box3d: Box3DOut | None
    corners: list[CornerOut]


class CornerRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=0, le=3)
    x: float = Finite
    y: float = Finite
    zg: float = Field(default=0.0, allow_inf_nan=False)


class AnnotationRecord(BaseModel):
    """One interchange record, as stored on disk."""

    model_config = ConfigDict(extra="forbid")

    frame: str
    object: str
    corners: list[CornerRecord] = Field(max_length=4)
    image_box: tuple[float, float, float, float] | None = None

    _indices = field_validator("corners")(_distinct_indices)
    _box = field_validator("image_box")(_ordered_image_box)


class AnnotationsPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    records: list[AnnotationRecord]


class AnnotationsResponse(BaseModel):
    frame: str
    records: list[dict]


class BevResponse(BaseModel):
    frame: str
    total: int
    count: int
    x: list[float]
    y: list[float]


class FramesResponse(BaseModel):
    frames: list[str]
