"""Workbench for linear exact repair of MDS array codes over small fields.

The package builds (n, n-r, l) MDS array codes over F_q from field
reduction of a normal rational curve, measures repair bandwidth and
repair I/O exactly, certifies the incidence-multiplicity lower bound by
brute force at desk scale, and replays repairs operationally so the
analytic counts can be reconciled against transcripts.
"""

__version__ = "0.1.0"

from .codes import (
    BoundsReport,
    CodeSkeleton,
    Realization,
    bounds_report,
    check_mds,
    is_codeword,
    realization_from_json,
    realization_to_json,
    realize,
    sample_codeword,
    skeleton_new,
)
from .errors import RepairToolError
from .gf import Field, FieldTower, build_tower
from .linalg import (
    Matrix,
    Subspace,
    contains,
    enumerate_rref,
    gaussian_binomial,
    intersect_dim,
    intersection,
    kernel,
    projective_point_count,
    rref,
)
from .nrc import (
    INF,
    Block,
    BlockPartition,
    NrcBundle,
    NrcParams,
    block_partition,
    build,
    norm_one_subgroup,
    nrc_subspace,
    repair_subspace,
    validate_params,
)
from .repair import (
    DualCover,
    IncidenceProfile,
    NodeMetrics,
    RepairScheme,
    bandwidth,
    bruteforce_column_hits,
    bruteforce_overlap,
    dual_cover,
    evaluate_scheme,
    hierarchy_check,
    incidence_profile,
    io_count,
    scheme_from_json,
    scheme_to_json,
)
from .simulate import (
    CampaignReport,
    RepairSession,
    RepairTranscript,
    campaign,
    row_factor,
    run_repair,
)

__all__ = [
    "__version__",
    "BoundsReport", "CodeSkeleton", "Realization", "bounds_report",
    "check_mds", "is_codeword", "realization_from_json",
    "realization_to_json", "realize", "sample_codeword", "skeleton_new",
    "RepairToolError",
    "Field", "FieldTower", "build_tower",
    "Matrix", "Subspace", "contains", "enumerate_rref", "gaussian_binomial",
    "intersect_dim", "intersection", "kernel", "projective_point_count",
    "rref",
    "INF", "Block", "BlockPartition", "NrcBundle", "NrcParams",
    "block_partition", "build", "norm_one_subgroup", "nrc_subspace",
    "repair_subspace", "validate_params",
    "DualCover", "IncidenceProfile", "NodeMetrics", "RepairScheme",
    "bandwidth", "bruteforce_column_hits", "bruteforce_overlap",
    "dual_cover", "evaluate_scheme", "hierarchy_check", "incidence_profile",
    "io_count", "scheme_from_json", "scheme_to_json",
    "CampaignReport", "RepairSession", "RepairTranscript", "campaign",
    "row_factor", "run_repair",
]
