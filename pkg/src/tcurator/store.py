"""Persistence: a SQLite store for curated queries, checkpoints and runs,
plus flat-file exports.

The store keeps one row per (run, query) and one row per annotation so a
finished run can be reloaded field for field.  All writes for a run go
through a single transaction; a failed load leaves no partial state.
"""
from __future__ import annotations

import json
import sqlite3
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .model import CuratedQuery, CurationError, DegreeKind
from .sparql import canonicalize

SCHEMA_VERSION = 1


class StorageFailure(CurationError):
    pass


class SchemaMismatch(StorageFailure):
    pass


_SCHEMA = """
CREATE TABLE runs (
    run_id   TEXT PRIMARY KEY,
    spec_yaml TEXT,
    started  TEXT NOT NULL,
    finished TEXT
);
CREATE TABLE queries (
    run_id        TEXT NOT NULL,
    id            TEXT NOT NULL,
    source_log    TEXT NOT NULL,
    text          TEXT NOT NULL,
    canonical_text TEXT,
    ip            TEXT NOT NULL,
    ts            TEXT NOT NULL,
    status        TEXT NOT NULL,
    PRIMARY KEY (run_id, id)
);
CREATE TABLE annotations (
    run_id   TEXT NOT NULL,
    query_id TEXT NOT NULL,
    seq      INTEGER NOT NULL,
    operator TEXT NOT NULL,
    kind     TEXT NOT NULL,
    value    TEXT NOT NULL,
    applied_at TEXT NOT NULL,
    PRIMARY KEY (run_id, query_id, seq)
);
CREATE TABLE checkpoints (
    run_id   TEXT NOT NULL,
    position INTEGER NOT NULL,
    stage    TEXT NOT NULL,
    payload  TEXT NOT NULL,
    PRIMARY KEY (run_id, stage)
);
"""


def open_store(path: str | Path) -> sqlite3.Connection:
    """Open (or initialize) a store, refusing other schema generations."""
    try:
        conn = sqlite3.connect(str(path))
    except sqlite3.Error as exc:
        raise StorageFailure(f"cannot open store at {path}: {exc}") from exc
    conn.row_factory = sqlite3.Row
    version = conn.execute("PRAGMA user_version").fetchone()[0]
    if version == 0:
        with conn:
            conn.executescript(_SCHEMA)
            conn.execute(f"PRAGMA user_version = {SCHEMA_VERSION}")
    elif version != SCHEMA_VERSION:
        conn.close()
        raise SchemaMismatch(
            f"store at {path} has schema version {version}, "
            f"this build expects {SCHEMA_VERSION}"
        )
    return conn


def record_run(
    conn: sqlite3.Connection, run_id: str, spec_yaml: str | None = None
) -> None:
    with conn:
        conn.execute(
            "INSERT OR REPLACE INTO runs (run_id, spec_yaml, started) "
            "VALUES (?, ?, ?)",
            (run_id, spec_yaml, datetime.utcnow().isoformat()),
        )


def finish_run(conn: sqlite3.Connection, run_id: str) -> None:
    with conn:
        conn.execute(
            "UPDATE runs SET finished = ? WHERE run_id = ?",
            (datetime.utcnow().isoformat(), run_id),
        )


def load_to_store(
    conn: sqlite3.Connection,
    run_id: str,
    queries: Sequence[CuratedQuery],
) -> int:
    """Replace the run's stored queries with ``queries``, atomically."""
    try:
        with conn:
            conn.execute("DELETE FROM queries WHERE run_id = ?", (run_id,))
            conn.execute("DELETE FROM annotations WHERE run_id = ?", (run_id,))
            for query in queries:
                canonical = (
                    canonicalize(query.parsed) if query.parsed is not None else None
                )
                conn.execute(
                    "INSERT INTO queries "
                    "(run_id, id, source_log, text, canonical_text, ip, ts, status) "
                    "VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                    (
                        run_id,
                        query.id,
                        query.source_log,
                        query.text,
                        canonical,
                        query.ip,
                        query.timestamp.isoformat(),
                        query.parse_status.value,
                    ),
                )
                conn.executemany(
                    "INSERT INTO annotations "
                    "(run_id, query_id, seq, operator, kind, value, applied_at) "
                    "VALUES (?, ?, ?, ?, ?, ?, ?)",
                    [
                        (
                            run_id,
                            query.id,
                            seq,
                            note.operator,
                            note.kind.value,
                            str(note.value),
                            note.applied_at.isoformat(),
                        )
                        for seq, note in enumerate(query.annotations)
                    ],
                )
    except sqlite3.Error as exc:
        raise StorageFailure(f"load into run {run_id!r} failed: {exc}") from exc
    return len(queries)


@dataclass(frozen=True)
class StoredQuery:
    id: str
    source_log: str
    text: str
    canonical_text: str | None
    ip: str
    timestamp: datetime
    status: str
    annotations: tuple[tuple[str, str, int | str], ...]


def read_store(conn: sqlite3.Connection, run_id: str) -> list[StoredQuery]:
    notes: dict[str, list[tuple[str, str, int | str]]] = {}
    rows = conn.execute(
        "SELECT query_id, operator, kind, value FROM annotations "
        "WHERE run_id = ? ORDER BY query_id, seq",
        (run_id,),
    )
    for row in rows:
        value: int | str = (
            int(row["value"])
            if row["kind"] == DegreeKind.BOOLEAN.value
            else row["value"]
        )
        notes.setdefault(row["query_id"], []).append(
            (row["operator"], row["kind"], value)
        )
    out: list[StoredQuery] = []
    for row in conn.execute(
        "SELECT * FROM queries WHERE run_id = ? ORDER BY rowid", (run_id,)
    ):
        out.append(
            StoredQuery(
                id=row["id"],
                source_log=row["source_log"],
                text=row["text"],
                canonical_text=row["canonical_text"],
                ip=row["ip"],
                timestamp=datetime.fromisoformat(row["ts"]),
                status=row["status"],
                annotations=tuple(notes.get(row["id"], ())),
            )
        )
    return out


def write_checkpoint(
    conn: sqlite3.Connection,
    run_id: str,
    position: int,
    stage: str,
    payload: dict,
) -> None:
    try:
        with conn:
            conn.execute(
                "INSERT OR REPLACE INTO checkpoints "
                "(run_id, position, stage, payload) VALUES (?, ?, ?, ?)",
                (run_id, position, stage, json.dumps(payload)),
            )
    except sqlite3.Error as exc:
        raise StorageFailure(
            f"checkpoint {stage!r} for run {run_id!r} failed: {exc}"
        ) from exc


def read_checkpoint(
    conn: sqlite3.Connection, run_id: str, stage: str
) -> dict | None:
    row = conn.execute(
        "SELECT payload FROM checkpoints WHERE run_id = ? AND stage = ?",
        (run_id, stage),
    ).fetchone()
    return None if row is None else json.loads(row["payload"])


def list_checkpoints(conn: sqlite3.Connection, run_id: str) -> list[str]:
    return [
        row["stage"]
        for row in conn.execute(
            "SELECT stage FROM checkpoints WHERE run_id = ? ORDER BY position",
            (run_id,),
        )
    ]


class ExportFormat(str, Enum):
    NDJSON = "ndjson"
    TEXT = "text"


def _single_line(text: str) -> str:
    return " ".join(text.split())


def export_queries(
    queries: Iterable[CuratedQuery],
    path: str | Path,
    fmt: ExportFormat,
) -> int:
    """Write curated queries to a flat file; returns the record count."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for query in queries:
            count += 1
            if fmt is ExportFormat.NDJSON:
                record = {
                    "id": query.id,
                    "source_log": query.source_log,
                    "text": query.text,
                    "annotations": [
                        {
                            "operator": note.operator,
                            "kind": note.kind.value,
                            "value": note.value,
                        }
                        for note in query.annotations
                    ],
                }
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            else:
                handle.write(f"# {query.id}\n{_single_line(query.text)}\n\n")
    return count


def read_export(path: str | Path, fmt: ExportFormat) -> list[dict]:
    """Read an export back; text exports carry only ids and text."""
    path = Path(path)
    if fmt is ExportFormat.NDJSON:
        return [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    records: list[dict] = []
    current: dict | None = None
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            current = {"id": line[2:], "text": ""}
            records.append(current)
        elif line.strip() and current is not None:
            current["text"] = line
    return records
