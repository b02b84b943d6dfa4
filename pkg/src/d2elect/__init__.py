"""Simulator and analysis toolkit for randomized leader election on
diameter-two networks."""

from .analysis import (
    BoundReport,
    BucketCase,
    BucketStats,
    bound_report,
    bucket_index,
    bucket_stats,
    chernoff_reference,
    tail_threshold,
)
from .engine import Message, MessageLedger, NodeView, TrialRng, replay, run_synchronous
from .graphs import (
    DiameterClass,
    Graph,
    GraphFamily,
    IdAssignment,
    from_edges,
    generate,
    load_edge_list,
    verify_diameter_at_most_two,
)
from .harness import (
    ExperimentConfig,
    GraphSpec,
    TrialReport,
    run_trials,
    scaling_sweep,
    verify_bounds,
    wilson_interval,
)
from .oracle import ExactLaw, cross_check_protocol, enumerate_exact
from .protocol import (
    CandidateDraw,
    ElectionOutcome,
    Status,
    candidate_probability,
    decide,
    elect,
    elect_fast,
    referee_min,
)

__all__ = [
    "BoundReport",
    "BucketCase",
    "BucketStats",
    "CandidateDraw",
    "DiameterClass",
    "ElectionOutcome",
    "ExactLaw",
    "ExperimentConfig",
    "Graph",
    "GraphFamily",
    "GraphSpec",
    "IdAssignment",
    "Message",
    "MessageLedger",
    "NodeView",
    "Status",
    "TrialReport",
    "TrialRng",
    "bound_report",
    "bucket_index",
    "bucket_stats",
    "candidate_probability",
    "chernoff_reference",
    "cross_check_protocol",
    "decide",
    "elect",
    "elect_fast",
    "enumerate_exact",
    "from_edges",
    "generate",
    "load_edge_list",
    "referee_min",
    "replay",
    "run_synchronous",
    "run_trials",
    "scaling_sweep",
    "tail_threshold",
    "verify_bounds",
    "verify_diameter_at_most_two",
    "wilson_interval",
]

__version__ = "0.1.0"
