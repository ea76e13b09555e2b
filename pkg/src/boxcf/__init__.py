"""Exact counterfactual explanations for tree ensembles via box geometry.

Every leaf of a tree ensemble is an axis-aligned box with a score vector;
overlaying all boxes partitions the input space into pure regions of
constant prediction. This package builds that decomposition exactly and
answers nearest-counterfactual queries over it with a branch-and-bound
search that never visits most of the regions it proves irrelevant.
"""

from .errors import (
    BoxcfError,
    DecompositionTooLargeError,
    InternalSearchError,
    ModelConsistencyError,
    ParseError,
    QueryValidationError,
    TimeBudgetExceededError,
    UnsupportedFeatureError,
)
from .geometry import (
    DEFAULT_REGION_CAP,
    PureRegion,
    containing_region,
    decompose,
    dist_to_box,
    dist_to_boxes,
    export_regions_jsonl,
)
from .ingest import FORMATS, ingest
from .leafset import LeafSet
from .model import (
    AGGREGATION_KINDS,
    FULL_INTERVAL,
    AggregationRule,
    EnsembleModel,
    Interval,
    LeafBox,
    Prediction,
    apply_aggregation,
    decide,
    evaluate,
)
from .oracle import (
    RandomModelSpec,
    generate_dump,
    generate_model,
    oracle_cf,
    oracle_cf_set,
    sample_validate,
    traverse_dump,
)
from .search import (
    CfQuery,
    CfResult,
    CfSetItem,
    CfTarget,
    ProjectedRect,
    SearchOptions,
    SearchStats,
    cf_query,
    cf_query_with_stats,
    cf_set,
    cf_set_with_stats,
    parallel_search,
    parallel_search_with_stats,
    project_regions,
    region_satisfies,
    restrict_leaves,
    upper_bound,
    validate_target,
)
from .sweep import (
    DimPresort,
    ElementaryInterval,
    intersect1d,
    presort_dimensions,
    segment_counts,
    sweep_events,
)

__version__ = "0.1.0"

__all__ = [
    "AGGREGATION_KINDS",
    "AggregationRule",
    "BoxcfError",
    "CfQuery",
    "CfResult",
    "CfSetItem",
    "CfTarget",
    "DEFAULT_REGION_CAP",
    "DecompositionTooLargeError",
    "DimPresort",
    "ElementaryInterval",
    "EnsembleModel",
    "FORMATS",
    "FULL_INTERVAL",
    "InternalSearchError",
    "Interval",
    "LeafBox",
    "LeafSet",
    "ModelConsistencyError",
    "ParseError",
    "Prediction",
    "ProjectedRect",
    "PureRegion",
    "QueryValidationError",
    "RandomModelSpec",
    "SearchOptions",
    "SearchStats",
    "TimeBudgetExceededError",
    "UnsupportedFeatureError",
    "apply_aggregation",
    "cf_query",
    "cf_query_with_stats",
    "cf_set",
    "cf_set_with_stats",
    "containing_region",
    "decide",
    "decompose",
    "dist_to_box",
    "dist_to_boxes",
    "evaluate",
    "export_regions_jsonl",
    "generate_dump",
    "generate_model",
    "ingest",
    "intersect1d",
    "oracle_cf",
    "oracle_cf_set",
    "parallel_search",
    "parallel_search_with_stats",
    "presort_dimensions",
    "project_regions",
    "region_satisfies",
    "restrict_leaves",
    "sample_validate",
    "segment_counts",
    "sweep_events",
    "traverse_dump",
    "upper_bound",
    "validate_target",
    "__version__",
]
