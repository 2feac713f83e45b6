"""tcurator: trust-based curation pipeline for SPARQL query logs."""
from .model import (
    CuratedQuery,
    CurationError,
    OperatorOutcome,
    ParsedQuery,
    QueryForm,
    QueryLog,
    QueryShape,
    RawLogEntry,
    TrustAnnotation,
    annotate,
    make_outcome,
)
from .metrics import RunStatistics, accumulate, rate_of_trust

__version__ = "0.1.0"

__all__ = [
    "CuratedQuery",
    "CurationError",
    "OperatorOutcome",
    "ParsedQuery",
    "QueryForm",
    "QueryLog",
    "QueryShape",
    "RawLogEntry",
    "RunStatistics",
    "TrustAnnotation",
    "accumulate",
    "annotate",
    "make_outcome",
    "rate_of_trust",
    "__version__",
]
