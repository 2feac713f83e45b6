"""Shared plumbing for trust operators.

Every operator splits its input into a trusted and an untrusted side and
annotates each query with its verdict; :func:`build_partition` packages
that split together with the bookkeeping record the pipeline consumes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..model import (
    CuratedQuery,
    CurationError,
    OperatorOutcome,
    annotate,
    make_outcome,
)


class InvalidParameter(CurationError):
    """An operator was configured with an out-of-range or unknown value."""


@dataclass(frozen=True)
class Partition:
    operator: str
    trusted: tuple[CuratedQuery, ...]
    untrusted: tuple[CuratedQuery, ...]
    outcome: OperatorOutcome


def build_partition(
    operator: str,
    trusted: Iterable[CuratedQuery],
    untrusted: Iterable[CuratedQuery],
    duration_ms: int = 0,
) -> Partition:
    trusted = tuple(trusted)
    untrusted = tuple(untrusted)
    return Partition(
        operator=operator,
        trusted=trusted,
        untrusted=untrusted,
        outcome=make_outcome(operator, trusted, untrusted, duration_ms),
    )


def mark(
    query: CuratedQuery,
    operator: str,
    trusted: bool,
    label: str | None = None,
) -> CuratedQuery:
    """Annotate a verdict: the mandatory yes/no, then an optional label."""
    marked = annotate(query, operator, 1 if trusted else 0)
    if label is not None:
        marked = annotate(marked, operator, label)
    return marked


def split_and_mark(
    operator: str,
    queries: Sequence[CuratedQuery],
    keep: Sequence[bool],
    labels: Sequence[str | None] | None = None,
) -> Partition:
    """Partition ``queries`` by the parallel ``keep`` flags, in input order."""
    trusted: list[CuratedQuery] = []
    untrusted: list[CuratedQuery] = []
    for index, query in enumerate(queries):
        label = labels[index] if labels is not None else None
        marked = mark(query, operator, keep[index], label)
        (trusted if keep[index] else untrusted).append(marked)
    return build_partition(operator, trusted, untrusted)
