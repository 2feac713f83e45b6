"""Operators that reason over sessions or over the whole query set."""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import timedelta
from enum import Enum
from fractions import Fraction
from pathlib import Path
from statistics import mean, pstdev
from typing import Mapping, Sequence

from ..model import CuratedQuery, QueryShape
from ..sparql import canonicalize
from .base import InvalidParameter, Partition, split_and_mark

EXPERT = "Expert"
INTERMEDIATE = "Intermediate"
BEGINNER = "Beginner"


@dataclass(frozen=True)
class Session:
    """One client's burst of activity, bounded by the inactivity gap."""

    ip: str
    queries: tuple[CuratedQuery, ...]

    @property
    def start(self):
        return self.queries[0].timestamp

    @property
    def end(self):
        return self.queries[-1].timestamp

    @property
    def duration(self) -> timedelta:
        return self.end - self.start


def sessionize(
    queries: Sequence[CuratedQuery],
    gap: timedelta = timedelta(minutes=30),
) -> list[Session]:
    """Group queries by client address, splitting where activity pauses."""
    by_ip: dict[str, list[CuratedQuery]] = defaultdict(list)
    for query in queries:
        by_ip[query.ip].append(query)
    sessions: list[Session] = []
    for ip, group in by_ip.items():
        group.sort(key=lambda q: q.timestamp)
        current = [group[0]]
        for query in group[1:]:
            if query.timestamp - current[-1].timestamp > gap:
                sessions.append(Session(ip, tuple(current)))
                current = [query]
            else:
                current.append(query)
        sessions.append(Session(ip, tuple(current)))
    sessions.sort(key=lambda s: (s.start, s.ip))
    return sessions


DEFAULT_AGENT_PATTERNS = (
    "bot",
    "crawler",
    "spider",
    "slurp",
    "curl",
    "wget",
    "python-requests",
    "libwww",
    "httpclient",
    "java/",
)


@dataclass(frozen=True)
class RobotConfig:
    agent_patterns: tuple[str, ...] = DEFAULT_AGENT_PATTERNS
    rate_threshold: float = 60.0  # queries per minute
    regularity_cv: float = 0.1
    min_session_length: int = 10
    session_gap_minutes: float = 30.0


def robotic_reason(session: Session, config: RobotConfig) -> str | None:
    """Why this session looks automated, or ``None`` if it looks human.

    Checks, in order: a self-declaring agent string; a sustained request
    rate no person types at; inter-arrival times too regular for a hand
    on a keyboard.  The rate and regularity checks only fire on sessions
    long enough to make the statistics meaningful.
    """
    patterns = [p.lower() for p in config.agent_patterns]
    for query in session.queries:
        agent = (query.entry.user_agent or "").lower()
        if agent and any(p in agent for p in patterns):
            return "agent"
    n = len(session.queries)
    if n < config.min_session_length:
        return None
    minutes = session.duration.total_seconds() / 60.0
    rate = float("inf") if minutes == 0 else n / minutes
    if rate > config.rate_threshold:
        return "rate"
    seconds = [
        (b.timestamp - a.timestamp).total_seconds()
        for a, b in zip(session.queries, session.queries[1:])
    ]
    average = mean(seconds)
    variation = 0.0 if average == 0 else pstdev(seconds) / average
    if variation < config.regularity_cv:
        return "regularity"
    return None


def clean_robots(
    queries: Sequence[CuratedQuery],
    config: RobotConfig = RobotConfig(),
) -> Partition:
    """Drop every query belonging to a session that looks automated."""
    robotic_ids: set[str] = set()
    gap = timedelta(minutes=config.session_gap_minutes)
    for session in sessionize(queries, gap):
        if robotic_reason(session, config) is not None:
            robotic_ids.update(q.id for q in session.queries)
    return split_and_mark(
        "RobotCleaner", queries, [q.id not in robotic_ids for q in queries]
    )


def expertise_level(session: Session) -> str:
    """Score a session's sophistication from structure, analytics, errors.

    Exact rational arithmetic keeps the band edges crisp: a session is
    Expert at a score of one or above, Beginner at zero or below.
    """
    total = len(session.queries)
    deep = sum(
        1
        for q in session.queries
        if q.features is not None
        and (q.features.shape in (QueryShape.TREE, QueryShape.CYCLE) or q.features.depth >= 3)
    )
    analytic = sum(
        1 for q in session.queries if q.features is not None and q.features.has_aggregate
    )
    failed = sum(1 for q in session.queries if q.initial_parse_failed)
    score = (
        2 * Fraction(deep, total)
        + Fraction(analytic, total)
        - Fraction(failed, total)
    )
    if score >= 1:
        return EXPERT
    if score <= 0:
        return BEGINNER
    return INTERMEDIATE


def filter_expertise(
    queries: Sequence[CuratedQuery],
    keep: frozenset[str] = frozenset({BEGINNER, INTERMEDIATE, EXPERT}),
) -> Partition:
    """Keep queries from sessions whose inferred level is accepted."""
    for level in keep:
        if level not in (BEGINNER, INTERMEDIATE, EXPERT):
            raise InvalidParameter(f"unknown expertise level {level!r}")
    level_by_id: dict[str, str] = {}
    for session in sessionize(queries):
        level = expertise_level(session)
        for query in session.queries:
            level_by_id[query.id] = level
    labels = [level_by_id[q.id] for q in queries]
    return split_and_mark(
        "ExpertiseFilter",
        queries,
        [label in keep for label in labels],
        labels=labels,
    )


class DedupMode(str, Enum):
    EXACT = "exact"
    CANONICAL = "canonical"


def deduplicate(
    queries: Sequence[CuratedQuery],
    mode: DedupMode = DedupMode.CANONICAL,
) -> Partition:
    """Keep the earliest of each duplicate group.

    Canonical mode compares parsed queries modulo variable names, pattern
    order and whitespace; anything unparsed falls back to its exact text.
    Ties on timestamp resolve to input order.
    """
    def key_of(query: CuratedQuery) -> str:
        if mode is DedupMode.CANONICAL and query.parsed is not None:
            return "c:" + canonicalize(query.parsed)
        return "x:" + query.text

    order = sorted(range(len(queries)), key=lambda i: queries[i].timestamp)
    winners: set[str] = set()
    seen: set[str] = set()
    for index in order:
        key = key_of(queries[index])
        if key not in seen:
            seen.add(key)
            winners.add(queries[index].id)
    return split_and_mark(
        "Deduplicator", queries, [q.id in winners for q in queries]
    )


UNKNOWN_TOPIC = "Unknown"


def load_topic_base(path: str | Path) -> dict[str, str]:
    """CSV with header ``iri,topic`` mapping vocabulary terms to topics."""
    import csv

    table: dict[str, str] = {}
    with Path(path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"iri", "topic"}.issubset(reader.fieldnames):
            raise InvalidParameter(f"{path}: header must include ['iri', 'topic']")
        for row in reader:
            table[row["iri"].strip()] = row["topic"].strip()
    return table


def assign_topic(query: CuratedQuery, base: Mapping[str, str]) -> str:
    """Majority vote over the known terms the query touches.

    Each occurrence of a mapped IRI votes for its topic; ties go to the
    lexicographically first topic, and a query with no known terms —
    or no parse at all — lands in ``Unknown``.
    """
    if query.parsed is None:
        return UNKNOWN_TOPIC
    votes: Counter[str] = Counter()
    for pattern in query.parsed.triple_patterns:
        for term in pattern.terms():
            key = term.constant_key()
            if key is not None and key in base:
                votes[base[key]] += 1
    if not votes:
        return UNKNOWN_TOPIC
    best = max(votes.values())
    return min(topic for topic, count in votes.items() if count == best)


def cluster_topics(
    queries: Sequence[CuratedQuery],
    base: Mapping[str, str],
    keep: frozenset[str] | None = None,
) -> Partition:
    """Label each query with its topic; optionally keep only some topics."""
    labels = [assign_topic(query, base) for query in queries]
    if keep is None:
        flags = [True] * len(labels)
    else:
        flags = [label in keep for label in labels]
    return split_and_mark("TopicClustering", queries, flags, labels=labels)


NON_INFORMATIVE = "NonInformative"


def informativeness(query: CuratedQuery) -> int:
    """Pattern count plus one vote per constant-term occurrence."""
    if query.parsed is None:
        return 0
    count = len(query.parsed.triple_patterns)
    for pattern in query.parsed.triple_patterns:
        for term in pattern.terms():
            if term.constant_key() is not None:
                count += 1
    return count


def rank_schema(
    queries: Sequence[CuratedQuery],
    threshold: float = 0.8,
) -> Partition:
    """Greedily keep the most informative queries, suppressing near-twins.

    Queries are visited in descending informativeness; one joins the
    trusted side only if its constant-term overlap with every query
    already kept stays below ``threshold``.  Queries with nothing to
    rank on are labeled ``NonInformative`` and dropped.
    """
    if not 0.0 <= threshold <= 1.0:
        raise InvalidParameter(
            f"threshold must be within [0, 1], got {threshold}"
        )
    scores = [informativeness(q) for q in queries]
    term_sets = [
        frozenset(q.parsed.constant_terms()) if q.parsed is not None else frozenset()
        for q in queries
    ]
    order = sorted(
        range(len(queries)), key=lambda i: (-scores[i], i)
    )
    kept: list[int] = []
    by_term: dict[str, list[int]] = defaultdict(list)
    flags = [False] * len(queries)
    labels: list[str | None] = [None] * len(queries)
    for index in order:
        if scores[index] == 0:
            labels[index] = NON_INFORMATIVE
            continue
        terms = term_sets[index]
        candidates = {other for term in terms for other in by_term[term]}
        similar = False
        for other in candidates:
            overlap = len(terms & term_sets[other])
            union = len(terms | term_sets[other])
            if union and overlap / union >= threshold:
                similar = True
                break
        if threshold == 0.0 and kept:
            similar = True
        if not similar:
            flags[index] = True
            kept.append(index)
            for term in terms:
                by_term[term].append(index)
    return split_and_mark("SchemaRanking", queries, flags, labels=labels)
