"""Box parameterizations built on footprint corners.

Six interchangeable encodings of an oriented BEV rectangle:

    center    (x_c, y_c, z_c, l, w, h, theta)   center-aligned reference
    corner    (x_o, y_o, n_o, l, w, theta)      one corner anchors the box
    d-corner  (x_o1, y_o1, x_o2, y_o2, n_o, theta)  diagonal plus heading
    ds-corner (x_o1, y_o1, x_o2, y_o2, n_o, l, w)   diagonal plus sizes
    f-corner  (x_o1, y_o1, ..., x_o4, y_o4)     all four corners
    c-corner  (x_c, y_c, x_o, y_o, w)           center, one corner, width

The center tuple carries vertical slots for completeness; they are zero
when encoding a BEV-only box and ignored on decode.  The c-corner tuple
does not name its corner, so the encoded record keeps the chosen index in
a side field; decode needs it to place the heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import InfeasibleGeometry, InvalidCornerIndex, UnsupportedScheme
from .geometry import CORNER_SIGNS, BoxBEV, canonicalize_yaw
from .recovery import fit_rectangle

DIAGONAL_TOLERANCE = 0.05  # meters; ds-corner length consistency check


class Scheme(str, Enum):
    CENTER = "center"
    CORNER = "corner"
    D_CORNER = "d-corner"
    DS_CORNER = "ds-corner"
    F_CORNER = "f-corner"
    C_CORNER = "c-corner"


@dataclass(frozen=True)
class Slot:
    """One tuple slot: its name and whether it is a length, angle, or index."""

    name: str
    kind: str  # "metric" | "angle" | "index"


SCHEME_SLOTS: dict[Scheme, tuple[Slot, ...]] = {
    Scheme.CENTER: (
        Slot("x_c", "metric"), Slot("y_c", "metric"), Slot("z_c", "metric"),
        Slot("l", "metric"), Slot("w", "metric"), Slot("h", "metric"),
        Slot("theta", "angle"),
    ),
    Scheme.CORNER: (
        Slot("x_o", "metric"), Slot("y_o", "metric"), Slot("n_o", "index"),
        Slot("l", "metric"), Slot("w", "metric"), Slot("theta", "angle"),
    ),
    Scheme.D_CORNER: (
        Slot("x_o1", "metric"), Slot("y_o1", "metric"),
        Slot("x_o2", "metric"), Slot("y_o2", "metric"),
        Slot("n_o", "index"), Slot("theta", "angle"),
    ),
    Scheme.DS_CORNER: (
        Slot("x_o1", "metric"), Slot("y_o1", "metric"),
        Slot("x_o2", "metric"), Slot("y_o2", "metric"),
        Slot("n_o", "index"), Slot("l", "metric"), Slot("w", "metric"),
    ),
    Scheme.F_CORNER: tuple(
        Slot(f"{axis}_o{i + 1}", "metric") for i in range(4) for axis in ("x", "y")
    ),
    Scheme.C_CORNER: (
        Slot("x_c", "metric"), Slot("y_c", "metric"),
        Slot("x_o", "metric"), Slot("y_o", "metric"), Slot("w", "metric"),
    ),
}

# Schemes anchored on a selectable corner.
CORNER_ANCHORED = (Scheme.CORNER, Scheme.D_CORNER, Scheme.DS_CORNER, Scheme.C_CORNER)


@dataclass(frozen=True)
class EncodedBox:
    """A box under one scheme: the scheme tag and its parameter tuple.

    ``corner_index`` mirrors the n_o slot for corner-anchored schemes and
    is the only record of the corner choice for c-corner.
    """

    scheme: Scheme
    params: tuple[float, ...]
    corner_index: int | None = None

    def __post_init__(self):
        slots = SCHEME_SLOTS[self.scheme]
        if len(self.params) != len(slots):
            raise ValueError(
                f"{self.scheme.value} expects {len(slots)} parameters, "
                f"got {len(self.params)}"
            )
        for slot, value in zip(slots, self.params):
            if slot.kind == "index" and int(value) not in (0, 1, 2, 3):
                raise InvalidCornerIndex(f"{slot.name} must be in 0..3, got {value}")
        if self.corner_index is not None and self.corner_index not in (0, 1, 2, 3):
            raise InvalidCornerIndex(
                f"corner_index must be in 0..3, got {self.corner_index}"
            )

    def with_params(self, params: tuple[float, ...]) -> "EncodedBox":
        return replace(self, params=tuple(params))


def slot_names(scheme: Scheme) -> tuple[str, ...]:
    return tuple(s.name for s in SCHEME_SLOTS[scheme])


def _check_corner_choice(corner_choice: int) -> int:
    if corner_choice not in (0, 1, 2, 3):
        raise InvalidCornerIndex(f"corner choice must be in 0..3, got {corner_choice}")
    return corner_choice


def encode(box: BoxBEV, scheme: Scheme, corner_choice: int = 0) -> EncodedBox:
    """Encode a BEV box under a scheme, anchored at ``corner_choice`` where relevant."""
    scheme = Scheme(scheme)
    if scheme is Scheme.CENTER:
        params = (box.x, box.y, 0.0, box.l, box.w, 0.0, box.theta)
        return EncodedBox(scheme, params)
    if scheme is Scheme.F_CORNER:
        params = tuple(v for corner in box.corner_array() for v in corner)
        return EncodedBox(scheme, params)

    n = _check_corner_choice(corner_choice)
    cx, cy = box.corner_xy(n)
    if scheme is Scheme.CORNER:
        params = (cx, cy, float(n), box.l, box.w, box.theta)
    elif scheme is Scheme.D_CORNER:
        ox, oy = box.corner_xy((n + 2) % 4)
        params = (cx, cy, ox, oy, float(n), box.theta)
    elif scheme is Scheme.DS_CORNER:
        ox, oy = box.corner_xy((n + 2) % 4)
        params = (cx, cy, ox, oy, float(n), box.l, box.w)
    elif scheme is Scheme.C_CORNER:
        params = (box.x, box.y, cx, cy, box.w)
    else:
        raise UnsupportedScheme(f"cannot encode scheme {scheme!r}")
    return EncodedBox(scheme, params, corner_index=n)


def _box_or_infeasible(x, y, l, w, theta) -> BoxBEV:
    try:
        return BoxBEV(x, y, l, w, theta)
    except ValueError as exc:
        raise InfeasibleGeometry(f"decoded parameters form no valid box: {exc}") from exc


def _decode_center(code: EncodedBox) -> BoxBEV:
    x, y, _z, l, w, _h, theta = code.params
    return _box_or_infeasible(x, y, l, w, theta)


def _decode_corner(code: EncodedBox) -> BoxBEV:
    x_o, y_o, n, l, w, theta = code.params
    sl, sw = CORNER_SIGNS[int(n)]
    c, s = math.cos(theta), math.sin(theta)
    ox, oy = sl * l / 2.0, sw * w / 2.0
    return _box_or_infeasible(x_o - (c * ox - s * oy), y_o - (s * ox + c * oy),
                              l, w, theta)


def _decode_d_corner(code: EncodedBox) -> BoxBEV:
    x1, y1, x2, y2, _n, theta = code.params
    c, s = math.cos(theta), math.sin(theta)
    dx, dy = x2 - x1, y2 - y1
    # Diagonal in the object frame; sizes are its |components|.
    ux = c * dx + s * dy
    uy = -s * dx + c * dy
    return _box_or_infeasible((x1 + x2) / 2.0, (y1 + y2) / 2.0,
                              abs(ux), abs(uy), theta)


def _decode_ds_corner(code: EncodedBox) -> BoxBEV:
    x1, y1, x2, y2, n, l, w = code.params
    n = int(n)
    dx, dy = x2 - x1, y2 - y1
    diag = math.hypot(dx, dy)
    expected = math.hypot(l, w)
    if abs(diag - expected) > DIAGONAL_TOLERANCE:
        raise InfeasibleGeometry(
            f"diagonal length {diag:.3f} disagrees with sizes "
            f"(expected {expected:.3f}, tolerance {DIAGONAL_TOLERANCE})"
        )
    sl, sw = CORNER_SIGNS[n]
    # Object-frame direction from corner n to its opposite is (-sl*l, -sw*w).
    theta = math.atan2(dy, dx) - math.atan2(-sw * w, -sl * l)
    return _box_or_infeasible((x1 + x2) / 2.0, (y1 + y2) / 2.0, l, w,
                              canonicalize_yaw(theta))


def _decode_f_corner(code: EncodedBox) -> BoxBEV:
    p = code.params
    obs = [(p[2 * i], p[2 * i + 1], i) for i in range(4)]
    try:
        fit = fit_rectangle(obs)
    except ValueError as exc:
        raise InfeasibleGeometry(f"corner tuple admits no rectangle: {exc}") from exc
    return fit.box


def _decode_c_corner(code: EncodedBox) -> BoxBEV:
    if code.corner_index is None:
        raise InfeasibleGeometry(
            "c-corner decode needs the encoded corner index to place the heading"
        )
    x_c, y_c, x_o, y_o, w = code.params
    dx, dy = x_o - x_c, y_o - y_c
    half_sq = dx * dx + dy * dy - (w / 2.0) ** 2
    if half_sq <= 0.0:
        raise InfeasibleGeometry(
            f"corner lies within w/2 = {w / 2.0:.3f} of the center; "
            "no positive length exists"
        )
    half_l = math.sqrt(half_sq)
    sl, sw = CORNER_SIGNS[code.corner_index]
    # Object-frame bearing of the chosen corner as seen from the center.
    phi = math.atan2(sw * w / 2.0, sl * half_l)
    theta = math.atan2(dy, dx) - phi
    return _box_or_infeasible(x_c, y_c, 2.0 * half_l, w, canonicalize_yaw(theta))


_DECODERS = {
    Scheme.CENTER: _decode_center,
    Scheme.CORNER: _decode_corner,
    Scheme.D_CORNER: _decode_d_corner,
    Scheme.DS_CORNER: _decode_ds_corner,
    Scheme.F_CORNER: _decode_f_corner,
    Scheme.C_CORNER: _decode_c_corner,
}


def decode(code: EncodedBox) -> BoxBEV:
    """Invert an encoding back to a BEV box.

    Raises InfeasibleGeometry when the parameters are mutually inconsistent
    (c-corner with the corner inside the w/2 disc, ds-corner whose diagonal
    disagrees with its sizes, or any tuple whose decoded dimensions are not
    positive).
    """
    scheme = Scheme(code.scheme)
    return _DECODERS[scheme](code)


def all_corner_variants(box: BoxBEV, scheme: Scheme) -> list[EncodedBox]:
    """Encode one box under every corner choice of a corner-anchored scheme."""
    scheme = Scheme(scheme)
    if scheme not in CORNER_ANCHORED:
        raise UnsupportedScheme(
            f"{scheme.value} has no corner choices; variants are undefined"
        )
    return [encode(box, scheme, corner_choice=n) for n in range(4)]
