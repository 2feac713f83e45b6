"""Operators that relate two query logs: similarity joins and enrichment."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Sequence

from ..model import CuratedQuery, ParsedQuery, QueryLog, annotate
from .base import InvalidParameter


def query_similarity(a: ParsedQuery, b: ParsedQuery) -> float:
    """Overlap of the constant terms two queries mention (Jaccard).

    Variables carry no meaning across queries, so only IRIs and literals
    count; two queries with no constants at all share nothing.
    """
    left = frozenset(a.constant_terms())
    right = frozenset(b.constant_terms())
    if not left and not right:
        return 0.0
    return len(left & right) / len(left | right)


@dataclass(frozen=True)
class JoinPair:
    left_id: str
    right_id: str
    similarity: float


def _check_threshold(threshold: float) -> None:
    if not 0.0 <= threshold <= 1.0:
        raise InvalidParameter(
            f"threshold must be within [0, 1], got {threshold}"
        )


def _candidate_pairs(
    left: Sequence[CuratedQuery], right: Sequence[CuratedQuery]
) -> set[tuple[int, int]]:
    """Index the right side by constant term so only overlapping pairs score."""
    by_term: dict[str, list[int]] = defaultdict(list)
    for j, query in enumerate(right):
        if query.parsed is None:
            continue
        for term in frozenset(query.parsed.constant_terms()):
            by_term[term].append(j)
    pairs: set[tuple[int, int]] = set()
    for i, query in enumerate(left):
        if query.parsed is None:
            continue
        for term in frozenset(query.parsed.constant_terms()):
            for j in by_term.get(term, ()):
                pairs.add((i, j))
    return pairs


def join_logs(
    left: QueryLog, right: QueryLog, threshold: float = 0.8
) -> list[JoinPair]:
    """Greedy one-to-one match of similar queries across two logs.

    Pairs are taken in descending similarity — ties broken by id order —
    and each query participates in at most one pair.
    """
    _check_threshold(threshold)
    scored: list[tuple[float, str, str, int, int]] = []
    for i, j in _candidate_pairs(left.entries, right.entries):
        a, b = left.entries[i], right.entries[j]
        similarity = query_similarity(a.parsed, b.parsed)
        if similarity >= threshold:
            scored.append((-similarity, a.id, b.id, i, j))
    scored.sort()
    used_left: set[int] = set()
    used_right: set[int] = set()
    pairs: list[JoinPair] = []
    for negated, left_id, right_id, i, j in scored:
        if i in used_left or j in used_right:
            continue
        used_left.add(i)
        used_right.add(j)
        pairs.append(JoinPair(left_id, right_id, -negated))
    return pairs


def adopt_candidates(
    target: QueryLog,
    donors: Sequence[QueryLog],
    threshold: float = 0.8,
) -> tuple[list[CuratedQuery], list[CuratedQuery]]:
    """Split donor queries into adopted and rejected by target similarity.

    A donor query is adopted when its best similarity against the target
    log reaches the threshold; the copy taken over is re-homed under the
    target log's id and records which log it came from.
    """
    _check_threshold(threshold)
    adopted: list[CuratedQuery] = []
    rejected: list[CuratedQuery] = []
    target_entries = list(target.entries)
    for donor in donors:
        pairs = _candidate_pairs(donor.entries, target_entries)
        best: dict[int, float] = {}
        for i, j in pairs:
            similarity = query_similarity(
                donor.entries[i].parsed, target_entries[j].parsed
            )
            current = best.get(i, 0.0)
            if similarity > current:
                best[i] = similarity
        for i, query in enumerate(donor.entries):
            score = best.get(i)
            take = (score is not None and score >= threshold) or (
                threshold == 0.0 and query.parsed is not None
            )
            if take:
                moved = replace(query, source_log=target.id)
                moved = annotate(moved, "LogsEnrichment", 1)
                moved = annotate(
                    moved, "LogsEnrichment", f"Enriched:{donor.id}"
                )
                adopted.append(moved)
            else:
                rejected.append(annotate(query, "LogsEnrichment", 0))
    return adopted, rejected


def enrich_log(
    target: QueryLog,
    donors: Sequence[QueryLog],
    threshold: float = 0.8,
) -> tuple[QueryLog, int]:
    """Fold sufficiently similar donor queries into the target log."""
    adopted, _ = adopt_candidates(target, donors, threshold)
    merged = QueryLog(
        id=target.id,
        source_dataset=target.source_dataset,
        entries=tuple(target.entries) + tuple(adopted),
    )
    return merged, len(adopted)
