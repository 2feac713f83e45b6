"""Core domain model: log entries, curated queries, trust annotations, outcomes.

Every operator in the pipeline consumes and produces values of these types.
All of them are immutable; "updating" a query means building a new one via
``dataclasses.replace`` (the ``with_*`` helpers below), so partially applied
operators can never corrupt shared state.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class CurationError(Exception):
    """Base class for every error raised by this package."""


class InvalidDegree(CurationError):
    """Trust degree value outside the emitting operator's declared set."""


class OverlappingPartition(CurationError):
    """Trusted and untrusted sets of one outcome share a query id."""


class QueryForm(str, Enum):
    SELECT = "Select"
    CONSTRUCT = "Construct"
    ASK = "Ask"
    DESCRIBE = "Describe"


class QueryShape(str, Enum):
    POINT = "Point"
    STAR = "Star"
    CHAIN = "Chain"
    TREE = "Tree"
    CYCLE = "Cycle"
    DISCONNECTED = "Disconnected"


class TermKind(str, Enum):
    IRI = "iri"
    LITERAL = "literal"
    VARIABLE = "variable"


class ParseStatus(str, Enum):
    UNPARSED = "unparsed"
    PARSED = "parsed"
    FAILED = "failed"


class DegreeKind(str, Enum):
    BOOLEAN = "boolean"
    CATEGORICAL = "categorical"


class Modifier(str, Enum):
    LIMIT = "Limit"
    OFFSET = "Offset"
    ORDER_BY = "OrderBy"
    FILTER = "Filter"
    OPTIONAL = "Optional"
    UNION = "Union"


@dataclass(frozen=True)
class RawLogEntry:
    """One well-formed access-log line.

    ``read_log`` is the producer and performs all field validation there
    (malformed lines never become entries); construction itself stays cheap
    because ingestion is the hot path.  ``line_no`` is the 1-based position
    of the line in its source file and takes part in query identity.
    """

    ip: str
    timestamp: datetime
    method: str
    raw_request: str
    status: int
    user_agent: str | None
    source_log: str
    line_no: int


@dataclass(frozen=True)
class LineError:
    """A line ``read_log`` could not turn into a :class:`RawLogEntry`."""

    source_log: str
    line_no: int
    reason: str


@dataclass(frozen=True)
class Term:
    """One RDF term position inside a triple pattern.

    ``text`` is the surface form as written.  For IRI terms, ``iri`` holds
    the absolute IRI when the term was written in brackets or its prefix
    resolved (declared or built-in); a prefixed name with an unknown prefix
    keeps ``iri = None`` and is later reported by the semantic checker.
    """

    kind: TermKind
    text: str
    iri: str | None = None
    prefix: str | None = None
    local: str | None = None

    def constant_key(self) -> str | None:
        """Identity used by similarity/topic matching; None for variables."""
        if self.kind is TermKind.VARIABLE:
            return None
        if self.kind is TermKind.IRI:
            return self.iri if self.iri is not None else self.text
        return self.text


@dataclass(frozen=True)
class TriplePattern:
    """Subject/predicate/object pattern.

    For semantically valid queries the predicate is never a literal; the
    parser can still produce one from malformed input, which the semantic
    checker reports as ``PredicateIsLiteral``.
    """

    subject: Term
    predicate: Term
    object: Term

    def terms(self) -> tuple[Term, Term, Term]:
        return (self.subject, self.predicate, self.object)

    def variables(self) -> frozenset[str]:
        return frozenset(
            t.text for t in self.terms() if t.kind is TermKind.VARIABLE
        )


@dataclass(frozen=True)
class SyntaxIssue:
    rule: str
    position: int
    message: str


@dataclass(frozen=True)
class ParsedQuery:
    """Structured view of one query in the supported subset.

    Beyond the minimum contract this keeps filter texts, limit/offset values
    and the raw projection items so the canonical renderer can emit real,
    re-parseable SPARQL (the canonical-text fixpoint property depends on it).
    """

    form: QueryForm
    distinct: bool
    triple_patterns: tuple[TriplePattern, ...]
    aggregates: tuple[str, ...]
    group_by: bool
    prefixes: Mapping[str, str]
    modifiers: frozenset[Modifier]
    projection: tuple[str, ...] = ()
    filters: tuple[str, ...] = ()
    group_by_terms: tuple[str, ...] = ()
    having: str | None = None
    order_by_text: str | None = None
    limit: int | None = None
    offset: int | None = None
    construct_template: tuple[TriplePattern, ...] = ()
    complex_unsupported: bool = False

    def variables(self) -> frozenset[str]:
        out: set[str] = set()
        for pat in self.triple_patterns:
            out.update(pat.variables())
        return frozenset(out)

    def constant_terms(self) -> frozenset[str]:
        """Constant (IRI / literal) identities across the pattern block."""
        out: set[str] = set()
        for pat in self.triple_patterns:
            for term in pat.terms():
                key = term.constant_key()
                if key is not None:
                    out.add(key)
        return frozenset(out)


@dataclass(frozen=True)
class QueryFeatures:
    pattern_count: int
    shape: QueryShape
    depth: int
    has_aggregate: bool
    has_group_by: bool
    distinct: bool
    variable_count: int


@dataclass(frozen=True)
class TrustAnnotation:
    """One operator's verdict on one query; append-only on the query."""

    operator: str
    kind: DegreeKind
    value: int | str
    applied_at: datetime


# Closed categorical label sets per operator; operators not listed may emit
# arbitrary labels (topics and enrichment provenance are open-ended).
DECLARED_LABELS: Mapping[str, frozenset[str]] = {
    "BusinessAcademic": frozenset({"Business", "Academic", "Unknown"}),
    "ComplexityFilter": frozenset(
        {s.value for s in QueryShape} | {"Unanalyzable"}
    ),
    "ExpertiseFilter": frozenset({"Beginner", "Intermediate", "Expert"}),
    "AnalyticSelector": frozenset({"Analytic", "Standard"}),
    "SyntacticCorrector": frozenset({"Repaired"}),
    "SemanticCorrector": frozenset({"Repaired"}),
    "SchemaRanking": frozenset({"NonInformative"}),
}


@dataclass(frozen=True)
class CuratedQuery:
    """A decoded query travelling through the pipeline.

    ``id`` is a content hash of (source_log, line number, decoded text) and
    is unique within a run.  ``features`` is present exactly when
    ``parse_status`` is PARSED.  ``initial_parse_failed`` survives syntactic
    repair so expertise scoring can still see the original failure.
    """

    id: str
    text: str
    entry: RawLogEntry
    source_log: str
    parse_status: ParseStatus = ParseStatus.UNPARSED
    parsed: ParsedQuery | None = None
    issues: tuple[SyntaxIssue, ...] = ()
    features: QueryFeatures | None = None
    annotations: tuple[TrustAnnotation, ...] = ()
    initial_parse_failed: bool = False

    @property
    def timestamp(self) -> datetime:
        return self.entry.timestamp

    @property
    def ip(self) -> str:
        return self.entry.ip

    def with_parse(
        self,
        parsed: ParsedQuery,
        features: QueryFeatures,
        *,
        text: str | None = None,
        repaired: bool = False,
    ) -> "CuratedQuery":
        return replace(
            self,
            text=self.text if text is None else text,
            parse_status=ParseStatus.PARSED,
            parsed=parsed,
            features=features,
            issues=(),
            initial_parse_failed=self.initial_parse_failed or repaired,
        )

    def with_failure(self, issues: Sequence[SyntaxIssue]) -> "CuratedQuery":
        return replace(
            self,
            parse_status=ParseStatus.FAILED,
            parsed=None,
            features=None,
            issues=tuple(issues),
        )


def query_id(source_log: str, line_no: int, text: str) -> str:
    """Content-hash identity of a query (stable across runs)."""
    digest = hashlib.sha256(
        f"{source_log}\n{line_no}\n{text}".encode("utf-8")
    )
    return digest.hexdigest()[:16]


def annotate(
    query: CuratedQuery, operator: str, degree: int | str
) -> CuratedQuery:
    """Append one trust annotation and return the new query.

    An ``int`` degree is Boolean and must be 0 or 1; a ``str`` degree is
    categorical and must belong to the operator's declared label set when
    one exists.  Raises :class:`InvalidDegree` otherwise.
    """
    if isinstance(degree, bool):
        degree = int(degree)
    if isinstance(degree, int):
        if degree not in (0, 1):
            raise InvalidDegree(
                f"boolean trust degree must be 0 or 1, got {degree!r}"
            )
        ann = TrustAnnotation(
            operator, DegreeKind.BOOLEAN, degree, datetime.now(timezone.utc)
        )
    elif isinstance(degree, str):
        allowed = DECLARED_LABELS.get(operator)
        if allowed is not None and degree not in allowed:
            raise InvalidDegree(
                f"label {degree!r} is not declared by operator {operator!r}"
            )
        ann = TrustAnnotation(
            operator, DegreeKind.CATEGORICAL, degree, datetime.now(timezone.utc)
        )
    else:
        raise InvalidDegree(f"unsupported degree type: {type(degree).__name__}")
    return replace(query, annotations=query.annotations + (ann,))


@dataclass(frozen=True)
class OperatorOutcome:
    """The (trusted, untrusted, rate) record one operator application emits.

    Invariants: the id lists are disjoint, their sizes sum to ``input_count``
    and ``rate_of_trust == (input_count - len(trusted)) / input_count``
    (0 for an empty input).
    """

    operator: str
    input_count: int
    trusted: tuple[str, ...]
    untrusted: tuple[str, ...]
    rate_of_trust: Fraction
    duration_ms: int = 0


def _id_of(item: CuratedQuery | str) -> str:
    return item if isinstance(item, str) else item.id


def make_outcome(
    operator: str,
    trusted: Iterable[CuratedQuery | str],
    untrusted: Iterable[CuratedQuery | str],
    duration_ms: int = 0,
) -> OperatorOutcome:
    """Build an outcome from the two partitions, enforcing disjointness."""
    trusted_ids = tuple(_id_of(q) for q in trusted)
    untrusted_ids = tuple(_id_of(q) for q in untrusted)
    overlap = set(trusted_ids) & set(untrusted_ids)
    if overlap:
        raise OverlappingPartition(
            f"{operator}: ids in both partitions: {sorted(overlap)[:5]}"
        )
    input_count = len(trusted_ids) + len(untrusted_ids)
    if input_count == 0:
        rate = Fraction(0)
    else:
        rate = Fraction(input_count - len(trusted_ids), input_count)
    return OperatorOutcome(
        operator=operator,
        input_count=input_count,
        trusted=trusted_ids,
        untrusted=untrusted_ids,
        rate_of_trust=rate,
        duration_ms=duration_ms,
    )


@dataclass(frozen=True)
class QueryLog:
    """A named collection of curated queries from one dataset."""

    id: str
    source_dataset: str
    entries: tuple[CuratedQuery, ...] = ()

    def __post_init__(self) -> None:
        stray = [q.id for q in self.entries if q.source_log != self.id]
        if stray:
            raise ValueError(
                f"queries {stray[:3]} carry a source_log other than {self.id!r}"
            )

    def ids(self) -> tuple[str, ...]:
        return tuple(q.id for q in self.entries)
