"""In-memory top-k indexes for scores that mix attraction and repulsion."""

from .baselines import generate, scan_topk, ta_topk
from .dataset import Dataset
from .engine import Pairing, QuerySpec, SDIndex, pair_dimensions, score_batch, score_point
from .exceptions import (
    DuplicateIdError,
    EmptyDatasetError,
    InvalidQueryError,
    InvalidWeightsError,
    NoIntersectionError,
    SDQueryError,
    UnknownIdError,
    WrongSlopeError,
)
from .geometry import (
    Point2,
    ProjectionKind,
    ProjectionRay,
    Query2,
    Weights2,
    intercept_at_reference,
    project_onto_axis,
    projection_angle,
    ray_intersection,
    score_from_projection,
    sd_score_2d,
    select_projection,
)
from .projection_tree import ProjectionTreeIndex
from .region_index import RegionCell, Top1RegionIndex

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DuplicateIdError",
    "EmptyDatasetError",
    "InvalidQueryError",
    "InvalidWeightsError",
    "NoIntersectionError",
    "Pairing",
    "Point2",
    "ProjectionKind",
    "ProjectionRay",
    "ProjectionTreeIndex",
    "Query2",
    "QuerySpec",
    "RegionCell",
    "SDIndex",
    "SDQueryError",
    "Top1RegionIndex",
    "UnknownIdError",
    "Weights2",
    "WrongSlopeError",
    "generate",
    "intercept_at_reference",
    "pair_dimensions",
    "project_onto_axis",
    "projection_angle",
    "ray_intersection",
    "scan_topk",
    "score_batch",
    "score_from_projection",
    "score_point",
    "sd_score_2d",
    "select_projection",
    "ta_topk",
    "__version__",
]
