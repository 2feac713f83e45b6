from __future__ import annotations

import sqlite3
from datetime import timedelta, timezone

import pytest

from tcurator.model import annotate
from tcurator.store import (
    ExportFormat,
    SchemaMismatch,
    export_queries,
    finish_run,
    list_checkpoints,
    load_to_store,
    open_store,
    read_checkpoint,
    read_export,
    read_store,
    record_run,
    write_checkpoint,
)

from conftest import make_query


@pytest.fixture
def conn(tmp_path):
    connection = open_store(tmp_path / "store.db")
    yield connection
    connection.close()


def sample_queries():
    first = make_query("SELECT ?s WHERE { ?s ?p ?o }", line_no=1)
    first = annotate(first, "RobotCleaner", 1)
    first = annotate(first, "TopicClustering", 1)
    first = annotate(first, "TopicClustering", "geography")
    second = make_query("SELECT ?x WHERE {", line_no=2)
    return [first, second]


def test_round_trip_preserves_every_field(conn):
    record_run(conn, "r1", "run_id: r1\n")
    queries = sample_queries()
    assert load_to_store(conn, "r1", queries) == 2
    rows = read_store(conn, "r1")
    assert [r.id for r in rows] == [q.id for q in queries]
    first, second = rows
    assert first.text == queries[0].text
    assert first.ip == queries[0].ip
    assert first.timestamp == queries[0].timestamp
    assert first.status == "parsed"
    assert first.canonical_text is not None
    assert first.annotations == (
        ("RobotCleaner", "boolean", 1),
        ("TopicClustering", "boolean", 1),
        ("TopicClustering", "categorical", "geography"),
    )
    assert second.canonical_text is None
    assert second.status == "failed"
    assert second.annotations == ()


def test_reload_replaces_not_appends(conn):
    record_run(conn, "r1")
    queries = sample_queries()
    load_to_store(conn, "r1", queries)
    load_to_store(conn, "r1", queries[:1])
    assert len(read_store(conn, "r1")) == 1


def test_runs_are_isolated(conn):
    record_run(conn, "a")
    record_run(conn, "b")
    load_to_store(conn, "a", sample_queries())
    load_to_store(conn, "b", sample_queries()[:1])
    assert len(read_store(conn, "a")) == 2
    assert len(read_store(conn, "b")) == 1


def test_finish_run_stamps_the_run(conn):
    record_run(conn, "r1")
    finish_run(conn, "r1")
    row = conn.execute(
        "SELECT started, finished FROM runs WHERE run_id = 'r1'"
    ).fetchone()
    assert row["started"] is not None
    assert row["finished"] is not None


def test_foreign_schema_is_refused(tmp_path):
    path = tmp_path / "other.db"
    raw = sqlite3.connect(str(path))
    raw.execute("PRAGMA user_version = 99")
    raw.execute("CREATE TABLE unrelated (x)")
    raw.commit()
    raw.close()
    with pytest.raises(SchemaMismatch):
        open_store(path)


def test_reopening_keeps_data(tmp_path):
    first = open_store(tmp_path / "s.db")
    record_run(first, "r1")
    load_to_store(first, "r1", sample_queries())
    first.close()
    second = open_store(tmp_path / "s.db")
    assert len(read_store(second, "r1")) == 2
    second.close()


# --- checkpoints ------------------------------------------------------------


def test_checkpoint_round_trip(conn):
    record_run(conn, "r1")
    payload = {"operator": "Extract", "trusted": ["a", "b"], "n": 3}
    write_checkpoint(conn, "r1", 0, "Extract", payload)
    write_checkpoint(conn, "r1", 1, "RobotCleaner", {"operator": "RobotCleaner"})
    assert read_checkpoint(conn, "r1", "Extract") == payload
    assert read_checkpoint(conn, "r1", "Missing") is None
    assert list_checkpoints(conn, "r1") == ["Extract", "RobotCleaner"]


def test_checkpoint_overwrite_is_idempotent(conn):
    record_run(conn, "r1")
    write_checkpoint(conn, "r1", 0, "Extract", {"v": 1})
    write_checkpoint(conn, "r1", 0, "Extract", {"v": 2})
    assert read_checkpoint(conn, "r1", "Extract") == {"v": 2}
    assert list_checkpoints(conn, "r1") == ["Extract"]


# --- exports ----------------------------------------------------------------


def test_ndjson_export_round_trips(tmp_path):
    queries = sample_queries()
    path = tmp_path / "out.ndjson"
    assert export_queries(queries, path, ExportFormat.NDJSON) == 2
    records = read_export(path, ExportFormat.NDJSON)
    assert [r["id"] for r in records] == [q.id for q in queries]
    assert records[0]["annotations"][0] == {
        "operator": "RobotCleaner",
        "kind": "boolean",
        "value": 1,
    }


def test_text_export_collapses_newlines(tmp_path):
    query = make_query("SELECT ?s\nWHERE { ?s ?p ?o }")
    path = tmp_path / "out.txt"
    export_queries([query], path, ExportFormat.TEXT)
    (record,) = read_export(path, ExportFormat.TEXT)
    assert record["id"] == query.id
    assert record["text"] == "SELECT ?s WHERE { ?s ?p ?o }"
