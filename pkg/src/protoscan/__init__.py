"""Incremental prototype-based density clustering with representatives.

A clustered "prototype" subset grows by random batches at a ramping density
threshold; convergence is declared when a held-out test block's labeling
(by per-cluster representative points) stops changing between iterations.
The final model is just the representative set — new points are labeled by
their nearest representative, and every point the run never absorbed is
labeled the same way.
"""

from .dataset import (
    Dataset,
    GenerationError,
    InputError,
    InsufficientDataError,
    NeighborIndex,
    ProtoscanError,
    QueryCounter,
    distance,
    generate_gaussian_blobs,
    generate_shapes,
    load_csv,
    nine_shapes,
    range_query,
    save_csv,
)
from .dbscan import (
    ClusterPartition,
    DbscanResult,
    PointStatus,
    cluster_from_cache,
    dbscan,
    save_labels_csv,
)
from .driver import (
    BenchResult,
    IpdConfig,
    IpdResult,
    bench,
    read_trace_jsonl,
    run_ipd,
    write_trace_jsonl,
)
from .metrics import (
    EvalResult,
    SilhouetteResult,
    evaluate,
    nmi,
    omega_score,
    silhouette,
    validity_ratio,
)
from .params import ParamCandidate, ParamGrid, estimate_params, k_dist_curve
from .prototype import (
    PrototypeGraph,
    UnionFind,
    estimate_eta,
    inc_dbscan,
    init_prototype,
    is_noise,
    recluster_saturated,
    reevaluate_core,
)
from .representatives import (
    RefineReport,
    RepresentativeSet,
    label_points,
    refine_noise,
    select_representatives,
)
from .stability import StabilityReport, compute_test_size, instability, stability_step

__version__ = "0.1.0"

__all__ = [
    "BenchResult", "ClusterPartition", "Dataset", "DbscanResult", "EvalResult",
    "GenerationError", "InputError", "InsufficientDataError", "IpdConfig",
    "IpdResult", "NeighborIndex", "ParamCandidate", "ParamGrid",
    "PointStatus", "ProtoscanError", "PrototypeGraph", "QueryCounter",
    "RefineReport", "RepresentativeSet", "SilhouetteResult", "StabilityReport",
    "UnionFind", "bench", "cluster_from_cache", "compute_test_size", "dbscan",
    "distance", "estimate_eta", "estimate_params", "evaluate",
    "generate_gaussian_blobs", "generate_shapes", "inc_dbscan",
    "init_prototype", "instability", "is_noise", "k_dist_curve",
    "label_points", "load_csv", "nine_shapes", "nmi", "omega_score",
    "range_query", "read_trace_jsonl", "recluster_saturated",
    "reevaluate_core", "refine_noise", "run_ipd", "save_csv",
    "save_labels_csv", "select_representatives", "silhouette",
    "stability_step", "validity_ratio", "write_trace_jsonl",
]
