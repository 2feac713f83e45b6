"""Streaming log ingestion: raw lines -> entries -> decoded queries.

Both readers yield one value per line — an entry or a :class:`LineError` —
so a single malformed line never aborts a file.  Everything is generator
based: a million-line log passes through in constant memory.
"""
from __future__ import annotations

import re
import urllib.parse
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .model import (
    CuratedQuery,
    CurationError,
    LineError,
    QueryForm,
    RawLogEntry,
    query_id,
)


class LogKind(str, Enum):
    COMBINED = "combined"
    TAB_SEPARATED = "tsv"


@dataclass(frozen=True)
class LogFormat:
    kind: LogKind
    query_param: str = "query"


class DecodeError(CurationError):
    pass


class NoQueryParameter(DecodeError):
    pass


class InvalidUtf8(DecodeError):
    pass


class EmptyQuery(DecodeError):
    pass


_COMBINED_RE = re.compile(
    r'^(\S+) \S+ \S+ \[([^\]]+)\] "([^"]*)" (\d{3}) \S+'
    r'(?: "[^"]*" "([^"]*)")?\s*$'
)

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}

_TZ_CACHE: dict[str, timezone] = {}


def _parse_clf_timestamp(raw: str) -> datetime:
    """dd/Mon/yyyy:HH:mm:ss +zzzz — hand-rolled, ~5x faster than strptime."""
    day = int(raw[0:2])
    month = _MONTHS[raw[3:6]]
    year = int(raw[7:11])
    hour = int(raw[12:14])
    minute = int(raw[15:17])
    second = int(raw[18:20])
    tz_text = raw[21:26]
    tz = _TZ_CACHE.get(tz_text)
    if tz is None:
        sign = -1 if tz_text[0] == "-" else 1
        offset = timedelta(
            hours=int(tz_text[1:3]), minutes=int(tz_text[3:5])
        )
        tz = timezone(sign * offset)
        _TZ_CACHE[tz_text] = tz
    return datetime(year, month, day, hour, minute, second, tzinfo=tz)


_IPV4_RE = re.compile(r"^\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}$")


def _valid_ip(text: str) -> bool:
    if _IPV4_RE.match(text):
        return all(int(part) <= 255 for part in text.split("."))
    if ":" in text:  # v6: rare in these logs, check properly
        import ipaddress

        try:
            ipaddress.ip_address(text)
            return True
        except ValueError:
            return False
    return False


def _combined_entry(
    line: str, source_log: str, line_no: int
) -> RawLogEntry | LineError:
    match = _COMBINED_RE.match(line)
    if match is None:
        return LineError(source_log, line_no, "line does not match the access-log shape")
    ip, ts_raw, request, status_raw, agent = match.groups()
    if not _valid_ip(ip):
        return LineError(source_log, line_no, f"invalid client address {ip!r}")
    try:
        timestamp = _parse_clf_timestamp(ts_raw)
    except (KeyError, ValueError, IndexError):
        return LineError(source_log, line_no, f"invalid timestamp {ts_raw!r}")
    status = int(status_raw)
    if not 100 <= status <= 599:
        return LineError(source_log, line_no, f"status {status} out of range")
    parts = request.split(" ")
    if len(parts) < 2 or not parts[1]:
        return LineError(source_log, line_no, "request line has no target")
    return RawLogEntry(
        ip=ip,
        timestamp=timestamp,
        method=parts[0],
        raw_request=parts[1],
        status=status,
        user_agent=agent or None,
        source_log=source_log,
        line_no=line_no,
    )


def _tsv_entry(
    line: str, source_log: str, line_no: int
) -> RawLogEntry | LineError:
    columns = line.rstrip("\n").split("\t")
    if len(columns) != 4:
        return LineError(
            source_log, line_no, f"expected 4 tab-separated columns, got {len(columns)}"
        )
    ip, ts_raw, encoded_query, status_raw = columns
    if not _valid_ip(ip):
        return LineError(source_log, line_no, f"invalid client address {ip!r}")
    try:
        text = ts_raw.replace("Z", "+00:00") if ts_raw.endswith("Z") else ts_raw
        timestamp = datetime.fromisoformat(text)
    except ValueError:
        return LineError(source_log, line_no, f"invalid timestamp {ts_raw!r}")
    if timestamp.tzinfo is None:
        timestamp = timestamp.replace(tzinfo=timezone.utc)
    try:
        status = int(status_raw)
    except ValueError:
        return LineError(source_log, line_no, f"invalid status {status_raw!r}")
    if not 100 <= status <= 599:
        return LineError(source_log, line_no, f"status {status} out of range")
    if not encoded_query:
        return LineError(source_log, line_no, "empty query column")
    return RawLogEntry(
        ip=ip,
        timestamp=timestamp,
        method="GET",
        raw_request=encoded_query,
        status=status,
        user_agent=None,
        source_log=source_log,
        line_no=line_no,
    )


def read_log(
    path: str | Path,
    fmt: LogFormat,
    source_log: str | None = None,
) -> Iterator[RawLogEntry | LineError]:
    """Stream a log file line by line; errors are values, not exceptions."""
    path = Path(path)
    name = source_log if source_log is not None else path.stem
    parse = _combined_entry if fmt.kind is LogKind.COMBINED else _tsv_entry
    with path.open("r", encoding="utf-8", errors="replace") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            yield parse(line, name, line_no)


def decode_query(raw_request: str, fmt: LogFormat) -> str:
    """Extract and percent-decode the query parameter — exactly one pass.

    ``+`` means space; bytes must be valid UTF-8.  Raises
    :class:`NoQueryParameter`, :class:`InvalidUtf8` or :class:`EmptyQuery`.
    """
    if fmt.kind is LogKind.TAB_SEPARATED:
        value = raw_request
    else:
        _, sep, query_string = raw_request.partition("?")
        if not sep:
            raise NoQueryParameter(f"no query string in {raw_request!r}")
        value = None
        for part in query_string.split("&"):
            name, eq, candidate = part.partition("=")
            if name == fmt.query_param and eq:
                value = candidate
                break
        if value is None:
            raise NoQueryParameter(
                f"parameter {fmt.query_param!r} not present"
            )
    try:
        decoded = urllib.parse.unquote(
            value.replace("+", " "), encoding="utf-8", errors="strict"
        )
    except UnicodeDecodeError as exc:
        raise InvalidUtf8(f"query bytes are not UTF-8: {exc}") from exc
    decoded = decoded.strip()
    if not decoded:
        raise EmptyQuery("decoded query text is empty")
    return decoded


_PROLOGUE_RE = re.compile(
    r"(?:\s+|#[^\n]*\n?|PREFIX\s+[^\s<]*\s*<[^>]*>|BASE\s*<[^>]*>)*",
    re.IGNORECASE,
)
_FORM_WORD_RE = re.compile(r"[A-Za-z]+")

_FORM_BY_WORD = {
    "SELECT": QueryForm.SELECT,
    "CONSTRUCT": QueryForm.CONSTRUCT,
    "ASK": QueryForm.ASK,
    "DESCRIBE": QueryForm.DESCRIBE,
}


def leading_form(text: str) -> QueryForm | None:
    """The query form keyword, looked up past comments and declarations."""
    end = _PROLOGUE_RE.match(text).end()
    word = _FORM_WORD_RE.match(text, end)
    if word is None:
        return None
    return _FORM_BY_WORD.get(word.group(0).upper())


DEFAULT_KEEP_FORMS = frozenset({QueryForm.SELECT, QueryForm.CONSTRUCT})


@dataclass
class ExtractionResult:
    """Iterable of curated queries; counters are final once it is drained."""

    _source: Iterator[CuratedQuery] = field(repr=False)
    emitted_count: int = 0
    rejected_count: int = 0
    entry_count: int = 0
    line_error_count: int = 0

    def __iter__(self) -> Iterator[CuratedQuery]:
        return self._source


def extract_queries(
    entries: Iterable[RawLogEntry | LineError],
    fmt: LogFormat,
    keep_forms: frozenset[QueryForm] = DEFAULT_KEEP_FORMS,
) -> ExtractionResult:
    """Decode entries and keep the requested query forms, preserving order.

    ``rejected_count`` collects decode failures, non-query requests and
    queries of unwanted forms; entries and rejects always add up.
    """
    result = ExtractionResult(_source=iter(()))

    def generate() -> Iterator[CuratedQuery]:
        for item in entries:
            if isinstance(item, LineError):
                result.line_error_count += 1
                continue
            result.entry_count += 1
            try:
                text = decode_query(item.raw_request, fmt)
            except DecodeError:
                result.rejected_count += 1
                continue
            if leading_form(text) not in keep_forms:
                result.rejected_count += 1
                continue
            result.emitted_count += 1
            yield CuratedQuery(
                id=query_id(item.source_log, item.line_no, text),
                text=text,
                entry=item,
                source_log=item.source_log,
            )

    result._source = generate()
    return result
