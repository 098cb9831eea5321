"""Corner-aligned 3D bounding boxes: encodings, weak annotations, recovery."""

from .codecs import EncodedBox, Scheme, all_corner_variants, decode, encode, slot_names
from .errors import (
    BehindCamera,
    CornerBoxError,
    Degenerate,
    DegenerateGeometry,
    InfeasibleGeometry,
    InsufficientPoints,
    InvalidCornerIndex,
    LocalizeOnly,
    MalformedRecord,
    MissingComponent,
    NonFinite,
    NonPositiveHeight,
    NoSolution,
    NotARectangle,
    TruncatedFile,
    Underdetermined,
    UnknownParameter,
    UnsupportedScheme,
)
from .geometry import (
    Box3D,
    BoxBEV,
    Corner,
    CornerSet,
    PointCloud,
    bev_iou,
    box_from_corners,
    canonicalize_yaw,
    corners_from_box,
    intersection_area,
    iou3d,
    yaw_distance,
)
from .pipeline import Dataset, RecoveryResult, recover_annotation, recover_frame
from .recovery import (
    CornerObservation,
    GroundPlane,
    Proposal,
    ProposalSource,
    RectangleFit,
    assemble_box3d,
    cluster_corners,
    fit_ground_plane,
    fit_rectangle,
    solve_corner_heights,
)
from .sensitivity import (
    NoiseSpec,
    PerturbationSpec,
    SchemeComparison,
    SensitivityCurve,
    compare_schemes,
    crossing_offset,
    sweep,
)
from .weak_labels import (
    ErasureStrategy,
    PointLabel,
    TargetCase,
    WeakAnnotation,
    WeakToFullTarget,
    annotation_weight,
    erasure_mask,
    foreground_mask,
    labels_to_weak,
    visibility_filter,
    weak_to_full,
)

__version__ = "0.1.0"

__all__ = [
    "Box3D",
    "BoxBEV",
    "Corner",
    "CornerSet",
    "PointCloud",
    "bev_iou",
    "box_from_corners",
    "canonicalize_yaw",
    "corners_from_box",
    "intersection_area",
    "iou3d",
    "yaw_distance",
    "EncodedBox",
    "Scheme",
    "encode",
    "decode",
    "all_corner_variants",
    "slot_names",
    "CornerObservation",
    "GroundPlane",
    "Proposal",
    "ProposalSource",
    "RectangleFit",
    "assemble_box3d",
    "cluster_corners",
    "fit_ground_plane",
    "fit_rectangle",
    "solve_corner_heights",
    "WeakAnnotation",
    "WeakToFullTarget",
    "TargetCase",
    "ErasureStrategy",
    "PointLabel",
    "annotation_weight",
    "erasure_mask",
    "foreground_mask",
    "labels_to_weak",
    "visibility_filter",
    "weak_to_full",
    "NoiseSpec",
    "PerturbationSpec",
    "SchemeComparison",
    "SensitivityCurve",
    "compare_schemes",
    "crossing_offset",
    "sweep",
    "Dataset",
    "RecoveryResult",
    "recover_annotation",
    "recover_frame",
    "CornerBoxError",
    "NonFinite",
    "NotARectangle",
    "InvalidCornerIndex",
    "UnsupportedScheme",
    "InfeasibleGeometry",
    "UnknownParameter",
    "LocalizeOnly",
    "Underdetermined",
    "BehindCamera",
    "NoSolution",
    "Degenerate",
    "InsufficientPoints",
    "DegenerateGeometry",
    "NonPositiveHeight",
    "MissingComponent",
    "TruncatedFile",
    "MalformedRecord",
]
