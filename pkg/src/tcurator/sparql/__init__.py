"""SPARQL subset frontend: parsing, features, canonical form, repair."""
from .canonical import canonicalize
from .correct import (
    SemanticIssue,
    SemanticRepair,
    SyntaxRepair,
    Vocabulary,
    check_semantics,
    correct_semantics,
    correct_syntax,
    levenshtein,
    load_vocabulary,
)
from .features import classify_join_graph, extract_features, join_edges
from .parser import BUILTIN_PREFIXES, parse_query

__all__ = [
    "BUILTIN_PREFIXES",
    "SemanticIssue",
    "SemanticRepair",
    "SyntaxRepair",
    "Vocabulary",
    "canonicalize",
    "check_semantics",
    "classify_join_graph",
    "correct_semantics",
    "correct_syntax",
    "extract_features",
    "join_edges",
    "levenshtein",
    "load_vocabulary",
    "parse_query",
]
