from __future__ import annotations

from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import pytest

from tcurator.engine import PipelineSpec, load_config
from tcurator.model import CuratedQuery, ParsedQuery, RawLogEntry, query_id
from tcurator.sparql import parse_query
from tcurator.sparql.features import extract_features

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fixture_spec(tmp_path) -> PipelineSpec:
    """The end-to-end fixture pipeline, writing into this test's tmp dir."""
    spec = load_config(DATA_DIR / "fixture.yaml")
    return replace(
        spec,
        store=str(tmp_path / "store.sqlite"),
        stats_out=str(tmp_path / "stats.yaml"),
    )


def make_query(
    text: str,
    *,
    ip: str = "192.0.2.1",
    at: datetime | None = None,
    agent: str | None = "Mozilla/5.0 (X11; Linux x86_64)",
    source_log: str = "test-log",
    line_no: int = 1,
    parse: bool = True,
) -> CuratedQuery:
    """Build a curated query the way extraction would, without file IO."""
    entry = RawLogEntry(
        ip=ip,
        timestamp=at or datetime(2023, 6, 15, 12, 0, tzinfo=timezone.utc),
        method="GET",
        raw_request="/sparql?query=...",
        status=200,
        user_agent=agent,
        source_log=source_log,
        line_no=line_no,
    )
    query = CuratedQuery(
        id=query_id(source_log, line_no, text),
        text=text,
        entry=entry,
        source_log=source_log,
    )
    if not parse:
        return query
    parsed = parse_query(text)
    if isinstance(parsed, ParsedQuery):
        return query.with_parse(parsed, extract_features(parsed))
    failed = query.with_failure(parsed)
    return replace(failed, initial_parse_failed=True)
