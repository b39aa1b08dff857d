from partree.engine.arrangement import Arrangement, Location, annotate_counts, build_arrangement
from partree.engine.cutting import (
    Cutting,
    WeightedLineSet,
    cut_multiset,
    cut_unweighted,
    cut_weighted,
    normalize_multiset,
)
from partree.engine.errors import (
    DatasetFormatError,
    DegenerateTriangleError,
    IntersectingSegmentsError,
    InvariantViolation,
    OutsideClipError,
    PreconditionError,
    PredicateNotFaceConstantError,
    ReportingDisabledError,
    ShearRequiredError,
)
from partree.engine.geometry import (
    HalfPlane,
    Line,
    Point,
    Ray,
    Segment,
    ShearTransform,
    SimplexCell,
    Triangle,
    choose_shear,
    dualize_line,
    dualize_point,
)
from partree.engine.rangecount import (
    RangeCountConfig,
    RangeCountIndex,
    build_rangecount,
    count_in_triangle,
    leaf_count,
)
from partree.engine.rayshoot import RayShootIndex, build_rayshoot, shoot
from partree.engine.refine import RefineConfig, refine
from partree.engine.segquery import (
    SegmentStore,
    SegQueryConfig,
    build_wedge_store,
    count_intersecting,
    detect_line,
    report_intersecting,
)
from partree.engine.stabbing import (
    StabbingConfig,
    StabbingIndex,
    build_stabbing,
    stab_count,
    stab_report,
)
from partree.engine.tree import PartitionTree, audit_tree, build_tree

__all__ = [
    "Arrangement",
    "Location",
    "annotate_counts",
    "build_arrangement",
    "Cutting",
    "WeightedLineSet",
    "cut_multiset",
    "cut_unweighted",
    "cut_weighted",
    "normalize_multiset",
    "DatasetFormatError",
    "DegenerateTriangleError",
    "IntersectingSegmentsError",
    "InvariantViolation",
    "OutsideClipError",
    "PreconditionError",
    "PredicateNotFaceConstantError",
    "ReportingDisabledError",
    "ShearRequiredError",
    "HalfPlane",
    "Line",
    "Point",
    "Ray",
    "Segment",
    "ShearTransform",
    "SimplexCell",
    "Triangle",
    "choose_shear",
    "dualize_line",
    "dualize_point",
    "RangeCountConfig",
    "RangeCountIndex",
    "build_rangecount",
    "count_in_triangle",
    "leaf_count",
    "RayShootIndex",
    "build_rayshoot",
    "shoot",
    "RefineConfig",
    "refine",
    "SegmentStore",
    "SegQueryConfig",
    "build_wedge_store",
    "count_intersecting",
    "detect_line",
    "report_intersecting",
    "StabbingConfig",
    "StabbingIndex",
    "build_stabbing",
    "stab_count",
    "stab_report",
    "PartitionTree",
    "audit_tree",
    "build_tree",
]
