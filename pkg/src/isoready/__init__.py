"""ISO 27001 readiness self-assessment toolkit.

A hierarchical scoring engine over domain/class/control/issue trees,
a bundled six-domain ISO 27001 taxonomy, persisted assessment sessions
with per-user history, reporting views, an HTTP API, and a CLI.
"""

from .errors import (
    AlreadyFinalized,
    AssessmentError,
    AuthFailure,
    BindFailure,
    DuplicateId,
    DuplicateUsername,
    EmptyNode,
    IncompleteAssessment,
    InvalidInput,
    MalformedDocument,
    NotFound,
    OutOfRangeScore,
    StoreOpenFailure,
    UnknownLeafId,
)
from .reporting import (
    Advice,
    Bar,
    HistogramSeries,
    Summary,
    advise,
    export_result,
    format_2dp,
    histogram_series,
    round2,
    summarize,
)
from .scoring import (
    DEFAULT_SCALE,
    AssessmentResult,
    Mode,
    NodeKind,
    NodeResult,
    Scale,
    ScoreSheet,
    TaxonomyNode,
    aggregate_node,
    evaluate,
    percentage_of,
    predicate_of,
    priority_of,
    validate_scores,
)
from .store import Experiment, HistoryRow, HistoryView, SessionStore, User
from .taxonomy import (
    Taxonomy,
    ValidationIssue,
    ValidationReport,
    builtin_iso27001,
    builtin_manifest,
    parse_taxonomy,
    serialize_taxonomy,
    taxonomy_to_dict,
    validate_taxonomy,
)

__version__ = "0.1.0"

__all__ = [
    "AlreadyFinalized",
    "AssessmentError",
    "AuthFailure",
    "BindFailure",
    "DuplicateId",
    "DuplicateUsername",
    "EmptyNode",
    "IncompleteAssessment",
    "InvalidInput",
    "MalformedDocument",
    "NotFound",
    "OutOfRangeScore",
    "StoreOpenFailure",
    "UnknownLeafId",
    "Advice",
    "Bar",
    "HistogramSeries",
    "Summary",
    "advise",
    "export_result",
    "format_2dp",
    "histogram_series",
    "round2",
    "summarize",
    "DEFAULT_SCALE",
    "AssessmentResult",
    "Mode",
    "NodeKind",
    "NodeResult",
    "Scale",
    "ScoreSheet",
    "TaxonomyNode",
    "aggregate_node",
    "evaluate",
    "percentage_of",
    "predicate_of",
    "priority_of",
    "validate_scores",
    "Experiment",
    "HistoryRow",
    "HistoryView",
    "SessionStore",
    "User",
    "Taxonomy",
    "ValidationIssue",
    "ValidationReport",
    "builtin_iso27001",
    "builtin_manifest",
    "parse_taxonomy",
    "serialize_taxonomy",
    "taxonomy_to_dict",
    "validate_taxonomy",
    "__version__",
]
