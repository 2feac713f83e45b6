"""Operators that judge each query on its own: origin, safety, complexity."""
from __future__ import annotations

import csv
import ipaddress
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..model import CuratedQuery, CurationError, QueryShape
from .base import InvalidParameter, Partition, split_and_mark

_Network = ipaddress.IPv4Network | ipaddress.IPv6Network


class KnowledgeBaseError(CurationError):
    """A knowledge-base file is malformed or internally inconsistent."""


ORIGIN_CATEGORIES = ("Business", "Academic")
UNKNOWN_ORIGIN = "Unknown"


@dataclass(frozen=True)
class OrgEntry:
    network: _Network
    category: str
    organization: str


@dataclass(frozen=True)
class IpKnowledgeBase:
    """Blacklisted address blocks plus an organization map, both CIDR-keyed."""

    blacklist: tuple[_Network, ...] = ()
    org_map: tuple[OrgEntry, ...] = ()

    def __post_init__(self) -> None:
        _reject_duplicate_networks("blacklist", self.blacklist)
        _reject_duplicate_networks(
            "organization map", tuple(entry.network for entry in self.org_map)
        )


def _reject_duplicate_networks(
    source: str, networks: Sequence[_Network]
) -> None:
    seen: set[tuple[int, str]] = set()
    for network in networks:
        key = (network.version, network.with_prefixlen)
        if key in seen:
            raise KnowledgeBaseError(
                f"{source}: block {network.with_prefixlen} listed twice"
            )
        seen.add(key)


def _parse_network(text: str, where: str) -> _Network:
    try:
        return ipaddress.ip_network(text, strict=False)
    except ValueError as exc:
        raise KnowledgeBaseError(f"{where}: bad network {text!r}: {exc}") from exc


def load_blacklist(path: str | Path) -> tuple[_Network, ...]:
    """One address or CIDR block per line; ``#`` starts a comment."""
    networks: list[_Network] = []
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        networks.append(_parse_network(line, f"{path}:{line_no}"))
    return tuple(networks)


def load_org_map(path: str | Path) -> tuple[OrgEntry, ...]:
    """CSV with header ``cidr,category,organization``."""
    entries: list[OrgEntry] = []
    with Path(path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"cidr", "category", "organization"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise KnowledgeBaseError(
                f"{path}: header must include {sorted(required)}"
            )
        for row_no, row in enumerate(reader, start=2):
            category = (row["category"] or "").strip()
            if category not in ORIGIN_CATEGORIES:
                raise KnowledgeBaseError(
                    f"{path}:{row_no}: category {category!r} is not one of "
                    f"{ORIGIN_CATEGORIES}"
                )
            entries.append(
                OrgEntry(
                    network=_parse_network(row["cidr"].strip(), f"{path}:{row_no}"),
                    category=category,
                    organization=(row["organization"] or "").strip(),
                )
            )
    return tuple(entries)


def load_ip_knowledge(
    blacklist_path: str | Path | None = None,
    org_map_path: str | Path | None = None,
) -> IpKnowledgeBase:
    return IpKnowledgeBase(
        blacklist=load_blacklist(blacklist_path) if blacklist_path else (),
        org_map=load_org_map(org_map_path) if org_map_path else (),
    )


def classify_origin(ip: str, kb: IpKnowledgeBase) -> tuple[str, str | None]:
    """Longest matching block wins; no match means ``("Unknown", None)``."""
    try:
        address = ipaddress.ip_address(ip)
    except ValueError:
        return UNKNOWN_ORIGIN, None
    best: OrgEntry | None = None
    for entry in kb.org_map:
        if entry.network.version != address.version:
            continue
        if address in entry.network:
            if best is None or entry.network.prefixlen > best.network.prefixlen:
                best = entry
    if best is None:
        return UNKNOWN_ORIGIN, None
    return best.category, best.organization


def is_blacklisted(ip: str, kb: IpKnowledgeBase) -> bool:
    try:
        address = ipaddress.ip_address(ip)
    except ValueError:
        return False
    return any(
        network.version == address.version and address in network
        for network in kb.blacklist
    )


def filter_origin(
    queries: Sequence[CuratedQuery],
    kb: IpKnowledgeBase,
    keep: frozenset[str] = frozenset(ORIGIN_CATEGORIES),
) -> Partition:
    """Keep queries whose client falls in an accepted origin category."""
    for category in keep:
        if category not in (*ORIGIN_CATEGORIES, UNKNOWN_ORIGIN):
            raise InvalidParameter(f"unknown origin category {category!r}")
    allowed = set(keep)
    categories = [classify_origin(q.ip, kb)[0] for q in queries]
    return split_and_mark(
        "BusinessAcademic",
        queries,
        [category in allowed for category in categories],
        labels=categories,
    )


def eliminate_vulnerable(
    queries: Sequence[CuratedQuery], kb: IpKnowledgeBase
) -> Partition:
    """Drop traffic from blacklisted address blocks."""
    return split_and_mark(
        "VulnerableEliminator",
        queries,
        [not is_blacklisted(q.ip, kb) for q in queries],
    )


UNANALYZABLE = "Unanalyzable"


def filter_complexity(
    queries: Sequence[CuratedQuery],
    keep_shapes: frozenset[QueryShape] = frozenset(QueryShape),
    min_depth: int = 0,
    max_depth: int | None = None,
) -> Partition:
    """Keep queries whose join graph has an accepted shape and depth.

    Queries that never parsed cannot be analyzed; they are dropped and
    labeled accordingly.
    """
    if min_depth < 0:
        raise InvalidParameter(f"min_depth must be >= 0, got {min_depth}")
    if max_depth is not None and max_depth < min_depth:
        raise InvalidParameter(
            f"max_depth {max_depth} is below min_depth {min_depth}"
        )
    keep: list[bool] = []
    labels: list[str] = []
    for query in queries:
        if query.features is None:
            keep.append(False)
            labels.append(UNANALYZABLE)
            continue
        features = query.features
        in_range = features.depth >= min_depth and (
            max_depth is None or features.depth <= max_depth
        )
        keep.append(features.shape in keep_shapes and in_range)
        labels.append(features.shape.value)
    return split_and_mark("ComplexityFilter", queries, keep, labels=labels)


ANALYTIC = "Analytic"
STANDARD = "Standard"
_ANALYTIC_CHOICES = (ANALYTIC, STANDARD, "Both")


def select_analytic(
    queries: Sequence[CuratedQuery], keep: str = "Both"
) -> Partition:
    """Split aggregating/grouping queries from plain lookups."""
    if keep not in _ANALYTIC_CHOICES:
        raise InvalidParameter(
            f"keep must be one of {_ANALYTIC_CHOICES}, got {keep!r}"
        )
    labels: list[str] = []
    flags: list[bool] = []
    for query in queries:
        analytic = query.features is not None and (
            query.features.has_aggregate or query.features.has_group_by
        )
        label = ANALYTIC if analytic else STANDARD
        labels.append(label)
        flags.append(keep == "Both" or keep == label)
    return split_and_mark("AnalyticSelector", queries, flags, labels=labels)
