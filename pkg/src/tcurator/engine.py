"""Pipeline engine: operator registry, ordering, execution, resume.

A pipeline is a set of operator names plus parameters.  The engine orders
the set canonically, streams the target log through each operator in turn,
checkpoints after every stage, and folds the per-operator outcomes into
run statistics.  Donor logs sit to the side until the cross-log stages.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, field, replace
from datetime import datetime
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import yaml

from .ingestion import LogFormat, LogKind, extract_queries, read_log
from .metrics import RunStatistics, accumulate, emit_stats, rate_of_trust
from .model import (
    CuratedQuery,
    CurationError,
    DegreeKind,
    OperatorOutcome,
    ParsedQuery,
    ParseStatus,
    QueryForm,
    QueryLog,
    QueryShape,
    TrustAnnotation,
)
from .operators import (
    DEFAULT_AGENT_PATTERNS,
    DedupMode,
    IpKnowledgeBase,
    Partition,
    RobotConfig,
    adopt_candidates,
    clean_robots,
    cluster_topics,
    deduplicate,
    eliminate_vulnerable,
    filter_complexity,
    filter_expertise,
    filter_origin,
    join_logs,
    load_ip_knowledge,
    load_topic_base,
    mark,
    rank_schema,
    select_analytic,
)
from .sparql import (
    Vocabulary,
    correct_semantics,
    correct_syntax,
    load_vocabulary,
    parse_query,
)
from .sparql.correct import local_of
from .sparql.features import extract_features
from .store import (
    ExportFormat,
    export_queries,
    finish_run,
    list_checkpoints,
    load_to_store,
    open_store,
    read_checkpoint,
    record_run,
    write_checkpoint,
)


class UnknownOperator(CurationError):
    pass


class DuplicateOperator(CurationError):
    pass


class MissingDependency(CurationError):
    pass


class InvalidConfig(CurationError):
    pass


class StageFailure(CurationError):
    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class MissingCheckpoint(CurationError):
    pass


class UnknownRun(CurationError):
    pass


# ---------------------------------------------------------------------------
# Registry

@dataclass(frozen=True)
class OperatorDescriptor:
    name: str
    summary: str
    params: Mapping[str, Mapping[str, Any]]
    requires: tuple[str, ...] = ()
    needs_second_log: bool = False


_SHAPES = [shape.value for shape in QueryShape]
_FORMS = [form.value for form in QueryForm]

_THRESHOLD = {"type": "number", "minimum": 0.0, "maximum": 1.0, "default": 0.8}

REGISTRY: tuple[OperatorDescriptor, ...] = (
    OperatorDescriptor(
        name="Extract",
        summary="Decode raw log entries into queries of the kept forms.",
        params={
            "keep_forms": {
                "type": "array",
                "items": {"type": "string", "enum": _FORMS},
                "default": ["Select", "Construct"],
            }
        },
    ),
    OperatorDescriptor(
        name="FormatConvert",
        summary="Parse query text into structured form and derive features.",
        params={},
    ),
    OperatorDescriptor(
        name="RobotCleaner",
        summary="Drop sessions that look automated (agent, rate, regularity).",
        params={
            "session_gap_minutes": {"type": "number", "minimum": 0, "default": 30.0},
            "rate_threshold": {"type": "number", "minimum": 0, "default": 60.0},
            "regularity_cv": {"type": "number", "minimum": 0, "default": 0.1},
            "min_session_length": {"type": "integer", "minimum": 2, "default": 10},
            "agent_patterns": {
                "type": "array",
                "items": {"type": "string"},
                "default": list(DEFAULT_AGENT_PATTERNS),
            },
        },
    ),
    OperatorDescriptor(
        name="BusinessAcademic",
        summary="Classify client origin against the organization map.",
        params={
            "keep": {
                "type": "array",
                "items": {
                    "type": "string",
                    "enum": ["Business", "Academic", "Unknown"],
                },
                "default": ["Business", "Academic"],
            }
        },
    ),
    OperatorDescriptor(
        name="VulnerableEliminator",
        summary="Drop queries from blacklisted address blocks.",
        params={},
    ),
    OperatorDescriptor(
        name="Deduplicator",
        summary="Keep the earliest of each duplicate group.",
        params={
            "mode": {
                "type": "string",
                "enum": ["exact", "canonical"],
                "default": "canonical",
            }
        },
    ),
    OperatorDescriptor(
        name="SyntacticCorrector",
        summary="Repair near-miss syntax so more queries parse.",
        params={},
    ),
    OperatorDescriptor(
        name="SemanticCorrector",
        summary="Replace unknown vocabulary terms with a unique close match.",
        params={"max_distance": {"type": "integer", "minimum": 1, "default": 2}},
    ),
    OperatorDescriptor(
        name="TopicClustering",
        summary="Assign each query a topic by majority vote over its terms.",
        params={
            "keep": {
                "type": "array",
                "items": {"type": "string"},
                "default": None,
            }
        },
    ),
    OperatorDescriptor(
        name="SchemaRanking",
        summary="Keep the most informative queries, suppressing near-twins.",
        params={"threshold": dict(_THRESHOLD)},
    ),
    OperatorDescriptor(
        name="ComplexityFilter",
        summary="Keep queries whose join graph matches the accepted shapes.",
        params={
            "keep_shapes": {
                "type": "array",
                "items": {"type": "string", "enum": _SHAPES},
                "default": list(_SHAPES),
            },
            "min_depth": {"type": "integer", "minimum": 0, "default": 0},
            "max_depth": {"type": "integer", "minimum": 0, "default": None},
        },
    ),
    OperatorDescriptor(
        name="ExpertiseFilter",
        summary="Keep queries from sessions at the accepted expertise levels.",
        params={
            "keep": {
                "type": "array",
                "items": {
                    "type": "string",
                    "enum": ["Beginner", "Intermediate", "Expert"],
                },
                "default": ["Beginner", "Intermediate", "Expert"],
            }
        },
        requires=("ComplexityFilter",),
    ),
    OperatorDescriptor(
        name="AnalyticSelector",
        summary="Split aggregating and grouping queries from plain lookups.",
        params={
            "keep": {
                "type": "string",
                "enum": ["Analytic", "Standard", "Both"],
                "default": "Both",
            }
        },
    ),
    OperatorDescriptor(
        name="LogsJoin",
        summary="Match similar queries across logs, one-to-one, greedily.",
        params={"threshold": dict(_THRESHOLD)},
    ),
    OperatorDescriptor(
        name="LogsEnrichment",
        summary="Adopt donor-log queries similar enough to the target log.",
        params={"threshold": dict(_THRESHOLD)},
        needs_second_log=True,
    ),
    OperatorDescriptor(
        name="Load",
        summary="Persist the surviving queries to the configured output.",
        params={},
    ),
)

CANONICAL_ORDER: tuple[str, ...] = tuple(d.name for d in REGISTRY)
_BY_NAME: Mapping[str, OperatorDescriptor] = {d.name: d for d in REGISTRY}
CHAIN_EXEMPT = frozenset({"LogsEnrichment"})


def describe_operators() -> list[dict]:
    """Registry view for the control plane: names, summaries, schemas."""
    return [
        {
            "name": d.name,
            "summary": d.summary,
            "params": {k: dict(v) for k, v in d.params.items()},
            "requires": list(d.requires),
            "needs_second_log": d.needs_second_log,
        }
        for d in REGISTRY
    ]


def order_operators(
    selected: Sequence[str], input_count: int | None = None
) -> tuple[str, ...]:
    """Arrange a selection into the canonical execution order.

    Rejects unknown names, duplicates, and selections whose dependencies
    cannot be met — including an enrichment stage when the number of
    input logs is known to be less than two.
    """
    seen: set[str] = set()
    for name in selected:
        if name not in _BY_NAME:
            raise UnknownOperator(f"no operator named {name!r}")
        if name in seen:
            raise DuplicateOperator(f"operator {name!r} selected twice")
        seen.add(name)
    for name in seen:
        for requirement in _BY_NAME[name].requires:
            if requirement not in seen:
                raise MissingDependency(
                    f"{name} requires {requirement}, which is not selected"
                )
        if (
            _BY_NAME[name].needs_second_log
            and input_count is not None
            and input_count < 2
        ):
            raise MissingDependency(
                f"{name} needs a second input log, got {input_count}"
            )
    return tuple(name for name in CANONICAL_ORDER if name in seen)


def validate_params(name: str, params: Mapping[str, Any]) -> list[str]:
    """Check a parameter mapping against the operator's schema."""
    if name not in _BY_NAME:
        return [f"no operator named {name!r}"]
    schema = _BY_NAME[name].params
    problems: list[str] = []
    for key, value in params.items():
        if key not in schema:
            problems.append(f"{name}: unknown parameter {key!r}")
            continue
        problems.extend(
            f"{name}.{key}: {issue}"
            for issue in _check_value(value, schema[key])
        )
    return problems


def _check_value(value: Any, spec: Mapping[str, Any]) -> list[str]:
    if value is None:
        # only parameters whose default is None are optional in this sense
        if spec.get("default", "") is None:
            return []
        return ["must not be null"]
    kind = spec["type"]
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return [f"expected a number, got {value!r}"]
    elif kind == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            return [f"expected an integer, got {value!r}"]
    elif kind == "string":
        if not isinstance(value, str):
            return [f"expected a string, got {value!r}"]
    elif kind == "boolean":
        if not isinstance(value, bool):
            return [f"expected a boolean, got {value!r}"]
    elif kind == "array":
        if not isinstance(value, (list, tuple)):
            return [f"expected an array, got {value!r}"]
        problems: list[str] = []
        for item in value:
            problems.extend(_check_value(item, spec["items"]))
        return problems
    if "enum" in spec and value not in spec["enum"]:
        return [f"{value!r} is not one of {spec['enum']}"]
    if "minimum" in spec and isinstance(value, (int, float)):
        if value < spec["minimum"]:
            return [f"{value!r} is below the minimum {spec['minimum']}"]
    if "maximum" in spec and isinstance(value, (int, float)):
        if value > spec["maximum"]:
            return [f"{value!r} is above the maximum {spec['maximum']}"]
    return []


def effective_params(name: str, params: Mapping[str, Any]) -> dict[str, Any]:
    merged = {
        key: spec.get("default") for key, spec in _BY_NAME[name].params.items()
    }
    merged.update(params)
    return merged


# ---------------------------------------------------------------------------
# Pipeline specification

@dataclass(frozen=True)
class InputSpec:
    path: str
    format: LogFormat
    source_dataset: str


@dataclass(frozen=True)
class KnowledgePaths:
    blacklist: str | None = None
    org_map: str | None = None
    topics: str | None = None
    vocabulary: str | None = None
    vocabulary_prefixes: str | None = None


@dataclass(frozen=True)
class OutputSpec:
    path: str
    format: str  # ndjson | text | sqlite


@dataclass(frozen=True)
class OperatorConfig:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineSpec:
    run_id: str
    inputs: tuple[InputSpec, ...]
    operators: tuple[OperatorConfig, ...]
    knowledge: KnowledgePaths = KnowledgePaths()
    store: str | None = None
    output: OutputSpec | None = None
    stats_out: str | None = None

    def order(self) -> tuple[str, ...]:
        return order_operators(
            [op.name for op in self.operators], input_count=len(self.inputs)
        )

    def params_for(self, name: str) -> dict[str, Any]:
        for op in self.operators:
            if op.name == name:
                return effective_params(name, op.params)
        return effective_params(name, {})

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "inputs": [
                {
                    "path": inp.path,
                    "format": inp.format.kind.value,
                    "query_param": inp.format.query_param,
                    "source_dataset": inp.source_dataset,
                }
                for inp in self.inputs
            ],
            "knowledge_bases": {
                "blacklist": self.knowledge.blacklist,
                "org_map": self.knowledge.org_map,
                "topics": self.knowledge.topics,
                "vocabulary": self.knowledge.vocabulary,
                "vocabulary_prefixes": self.knowledge.vocabulary_prefixes,
            },
            "store": self.store,
            "output": (
                {"path": self.output.path, "format": self.output.format}
                if self.output
                else None
            ),
            "stats_out": self.stats_out,
            "operators": [
                {"name": op.name, "params": dict(op.params)}
                for op in self.operators
            ],
        }


def spec_from_dict(data: Mapping[str, Any], base_dir: str | Path | None = None) -> PipelineSpec:
    """Build and validate a pipeline spec from a plain mapping.

    Paths are resolved against ``base_dir`` (the config file's directory)
    so a spec stays runnable no matter where the process starts.
    """
    problems: list[str] = []
    base = Path(base_dir) if base_dir is not None else None

    def resolve(value: str | None) -> str | None:
        if value is None:
            return None
        path = Path(value)
        if base is not None and not path.is_absolute():
            path = base / path
        return str(path)

    run_id = data.get("run_id")
    if not isinstance(run_id, str) or not run_id:
        problems.append("run_id must be a non-empty string")
        run_id = "invalid"

    inputs: list[InputSpec] = []
    raw_inputs = data.get("inputs")
    if not isinstance(raw_inputs, list) or not raw_inputs:
        problems.append("inputs must be a non-empty list")
        raw_inputs = []
    for index, raw in enumerate(raw_inputs):
        if not isinstance(raw, dict) or "path" not in raw:
            problems.append(f"inputs[{index}] must be a mapping with a path")
            continue
        kind_text = raw.get("format", "combined")
        try:
            kind = LogKind(kind_text)
        except ValueError:
            problems.append(
                f"inputs[{index}].format must be 'combined' or 'tsv', "
                f"got {kind_text!r}"
            )
            kind = LogKind.COMBINED
        inputs.append(
            InputSpec(
                path=resolve(str(raw["path"])),
                format=LogFormat(
                    kind=kind, query_param=str(raw.get("query_param", "query"))
                ),
                source_dataset=str(
                    raw.get("source_dataset", Path(str(raw["path"])).stem)
                ),
            )
        )
    names = [inp.source_dataset for inp in inputs]
    if len(set(names)) != len(names):
        problems.append("input source_dataset names must be unique")

    kb_raw = data.get("knowledge_bases") or {}
    if not isinstance(kb_raw, dict):
        problems.append("knowledge_bases must be a mapping")
        kb_raw = {}
    knowledge = KnowledgePaths(
        blacklist=resolve(kb_raw.get("blacklist")),
        org_map=resolve(kb_raw.get("org_map")),
        topics=resolve(kb_raw.get("topics")),
        vocabulary=resolve(kb_raw.get("vocabulary")),
        vocabulary_prefixes=resolve(kb_raw.get("vocabulary_prefixes")),
    )

    output_raw = data.get("output")
    output: OutputSpec | None = None
    if output_raw is not None:
        if (
            not isinstance(output_raw, dict)
            or "path" not in output_raw
            or output_raw.get("format") not in ("ndjson", "text", "sqlite")
        ):
            problems.append(
                "output must map 'path' and a format of ndjson, text or sqlite"
            )
        else:
            output = OutputSpec(
                path=resolve(str(output_raw["path"])),
                format=str(output_raw["format"]),
            )

    operators: list[OperatorConfig] = []
    raw_ops = data.get("operators")
    if not isinstance(raw_ops, list) or not raw_ops:
        problems.append("operators must be a non-empty list")
        raw_ops = []
    for index, raw in enumerate(raw_ops):
        if isinstance(raw, str):
            name, params = raw, {}
        elif isinstance(raw, dict) and "name" in raw:
            name = str(raw["name"])
            params = raw.get("params") or {}
            if not isinstance(params, dict):
                problems.append(f"operators[{index}].params must be a mapping")
                params = {}
        else:
            problems.append(
                f"operators[{index}] must be a name or a mapping with one"
            )
            continue
        if name in _BY_NAME:
            problems.extend(validate_params(name, params))
        operators.append(OperatorConfig(name=name, params=params))

    spec = PipelineSpec(
        run_id=run_id,
        inputs=tuple(inputs),
        operators=tuple(operators),
        knowledge=knowledge,
        store=resolve(data.get("store")),
        output=output,
        stats_out=resolve(data.get("stats_out")),
    )
    if not problems:
        try:
            spec.order()
        except CurationError as exc:
            problems.append(str(exc))
    if problems:
        raise InvalidConfig("; ".join(problems))
    return spec


def load_config(path: str | Path) -> PipelineSpec:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InvalidConfig(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidConfig(f"config {path} must be a mapping")
    return spec_from_dict(data, base_dir=path.parent)


# ---------------------------------------------------------------------------
# Execution

SAMPLE_LIMIT = 100


@dataclass
class StageRecord:
    """What the engine keeps per executed stage, beyond the outcome."""

    outcome: OperatorOutcome
    trusted_sample: tuple[CuratedQuery, ...] = ()
    untrusted_sample: tuple[CuratedQuery, ...] = ()


@dataclass
class PipelineResult:
    run_id: str
    order: tuple[str, ...]
    stats: RunStatistics
    outcomes: tuple[OperatorOutcome, ...]
    survivors: tuple[CuratedQuery, ...]
    stages: dict[str, StageRecord]
    join_pairs: tuple[tuple[str, str, float], ...]
    line_errors: int


def _parse_into(query: CuratedQuery) -> CuratedQuery:
    outcome = parse_query(query.text)
    if isinstance(outcome, ParsedQuery):
        return query.with_parse(outcome, extract_features(outcome))
    return replace(query.with_failure(outcome), initial_parse_failed=True)


_TERM_BOUNDARY = r"(?![A-Za-z0-9_\-.%])"


def _written_form(original: str, new_iri: str) -> str:
    if original.startswith("<"):
        return f"<{new_iri}>"
    prefix = original.split(":", 1)[0]
    return f"{prefix}:{local_of(new_iri)}"


class _Execution:
    """One pipeline run (or resume) over a prepared spec."""

    def __init__(self, spec: PipelineSpec, progress: Callable[[str, int], None] | None = None):
        self.spec = spec
        self.progress = progress
        self.conn = open_store(spec.store) if spec.store else None
        self.live: list[CuratedQuery] = []
        self.donors: dict[str, list[CuratedQuery]] = {}
        self.records: dict[str, StageRecord] = {}
        self.outcomes: list[OperatorOutcome] = []
        self.join_pairs: list[tuple[str, str, float]] = []
        self.line_errors = 0
        self._extract_outcome: OperatorOutcome | None = None
        self._ip_kb: IpKnowledgeBase | None = None
        self._vocab: Vocabulary | None = None
        self._topics: dict[str, str] | None = None

    # -- ingestion ---------------------------------------------------------

    def prepare(self) -> None:
        """Read, decode and parse every input log; the first is the target."""
        keep_raw = self.spec.params_for("Extract")["keep_forms"]
        keep = frozenset(QueryForm(form) for form in keep_raw)
        for position, input_spec in enumerate(self.spec.inputs):
            try:
                entries = read_log(
                    input_spec.path,
                    input_spec.format,
                    source_log=input_spec.source_dataset,
                )
                result = extract_queries(entries, input_spec.format, keep)
                queries = [_parse_into(query) for query in result]
            except OSError as exc:
                raise StageFailure(
                    "Extract", f"cannot read {input_spec.path}: {exc}"
                ) from exc
            self.line_errors += result.line_error_count
            if position == 0:
                self.live = queries
                self._extract_outcome = OperatorOutcome(
                    operator="Extract",
                    input_count=result.entry_count,
                    trusted=tuple(q.id for q in queries),
                    untrusted=tuple(
                        f"{input_spec.source_dataset}:rejected:{n}"
                        for n in range(result.rejected_count)
                    ),
                    rate_of_trust=rate_of_trust(
                        result.entry_count, len(queries)
                    ),
                )
            else:
                self.donors[input_spec.source_dataset] = queries

    # -- knowledge bases ----------------------------------------------------

    def ip_kb(self) -> IpKnowledgeBase:
        if self._ip_kb is None:
            self._ip_kb = load_ip_knowledge(
                self.spec.knowledge.blacklist, self.spec.knowledge.org_map
            )
        return self._ip_kb

    def vocabulary(self) -> Vocabulary | None:
        if self.spec.knowledge.vocabulary is None:
            return None
        if self._vocab is None:
            self._vocab = load_vocabulary(
                self.spec.knowledge.vocabulary,
                self.spec.knowledge.vocabulary_prefixes,
            )
        return self._vocab

    def topic_base(self) -> dict[str, str]:
        if self._topics is None:
            if self.spec.knowledge.topics is None:
                self._topics = {}
            else:
                self._topics = load_topic_base(self.spec.knowledge.topics)
        return self._topics

    # -- stage dispatch ------------------------------------------------------

    def execute(self, order: Sequence[str], start_at: int = 0) -> PipelineResult:
        run_id = self.spec.run_id
        for position in range(start_at, len(order)):
            name = order[position]
            params = self.spec.params_for(name)
            before = self._annotation_watermarks()
            before_texts = {q.id: q.text for q in self.live}
            started = time.perf_counter()
            try:
                partition = self._run_stage(name, params)
            except CurationError as exc:
                raise StageFailure(name, str(exc)) from exc
            duration_ms = int((time.perf_counter() - started) * 1000)
            outcome = replace(partition.outcome, duration_ms=duration_ms)
            self.outcomes.append(outcome)
            self.records[name] = StageRecord(
                outcome=outcome,
                trusted_sample=partition.trusted[:SAMPLE_LIMIT],
                untrusted_sample=partition.untrusted[:SAMPLE_LIMIT],
            )
            if self.conn is not None:
                write_checkpoint(
                    self.conn,
                    run_id,
                    position,
                    name,
                    self._payload(name, outcome, before, before_texts),
                )
            if self.progress is not None:
                self.progress(name, position)
        stats = accumulate(self.outcomes, run_id, chain_exempt=CHAIN_EXEMPT)
        if self.spec.stats_out:
            emit_stats(stats, self.spec.stats_out)
        if self.conn is not None:
            finish_run(self.conn, run_id)
        return PipelineResult(
            run_id=run_id,
            order=tuple(order),
            stats=stats,
            outcomes=tuple(self.outcomes),
            survivors=tuple(self.live),
            stages=self.records,
            join_pairs=tuple(self.join_pairs),
            line_errors=self.line_errors,
        )

    def _run_stage(self, name: str, params: dict[str, Any]) -> Partition:
        handler = getattr(self, "_stage_" + _snake(name))
        partition: Partition = handler(params)
        self.live = list(partition.trusted)
        return partition

    def _annotation_watermarks(self) -> dict[str, int]:
        marks = {q.id: len(q.annotations) for q in self.live}
        for queries in self.donors.values():
            marks.update({q.id: len(q.annotations) for q in queries})
        return marks

    def _payload(
        self,
        stage: str,
        outcome: OperatorOutcome,
        before: Mapping[str, int],
        before_texts: Mapping[str, str],
    ) -> dict:
        added: dict[str, list[list[str]]] = {}
        texts: dict[str, str] = {}
        adopted: list[str] = []
        record = self.records[stage]
        seen: set[str] = set()
        for query in (*self.live, *record.untrusted_sample):
            if query.id in seen:
                continue
            seen.add(query.id)
            watermark = before.get(query.id, 0)
            fresh = query.annotations[watermark:]
            if fresh:
                added[query.id] = [
                    [
                        note.operator,
                        note.kind.value,
                        str(note.value),
                        note.applied_at.isoformat(),
                    ]
                    for note in fresh
                ]
            if before_texts.get(query.id, query.text) != query.text:
                texts[query.id] = query.text
        if stage == "LogsEnrichment":
            adopted = [
                query.id
                for query in self.live
                if any(
                    note.operator == "LogsEnrichment"
                    and note.kind is DegreeKind.CATEGORICAL
                    for note in query.annotations
                )
            ]
        return {
            "operator": stage,
            "input_count": outcome.input_count,
            "trusted": list(outcome.trusted),
            "untrusted": list(outcome.untrusted),
            "duration_ms": outcome.duration_ms,
            "annotations": added,
            "text_overrides": texts,
            "adopted": adopted,
            "join_pairs": [list(pair) for pair in self.join_pairs]
            if stage == "LogsJoin"
            else [],
        }

    # -- stages --------------------------------------------------------------

    def _stage_extract(self, params: dict[str, Any]) -> Partition:
        outcome = self._extract_outcome
        assert outcome is not None, "prepare() must run before execute()"
        self.live = [mark(q, "Extract", True) for q in self.live]
        return Partition(
            operator="Extract",
            trusted=tuple(self.live),
            untrusted=(),
            outcome=outcome,
        )

    def _stage_format_convert(self, params: dict[str, Any]) -> Partition:
        # Parsing already happened right after extraction; this stage
        # accounts for it and stamps the verdict.
        trusted = tuple(mark(q, "FormatConvert", True) for q in self.live)
        return Partition(
            operator="FormatConvert",
            trusted=trusted,
            untrusted=(),
            outcome=OperatorOutcome(
                operator="FormatConvert",
                input_count=len(trusted),
                trusted=tuple(q.id for q in trusted),
                untrusted=(),
                rate_of_trust=Fraction(0),
            ),
        )

    def _stage_robot_cleaner(self, params: dict[str, Any]) -> Partition:
        config = RobotConfig(
            agent_patterns=tuple(params["agent_patterns"]),
            rate_threshold=float(params["rate_threshold"]),
            regularity_cv=float(params["regularity_cv"]),
            min_session_length=int(params["min_session_length"]),
            session_gap_minutes=float(params["session_gap_minutes"]),
        )
        return clean_robots(self.live, config)

    def _stage_business_academic(self, params: dict[str, Any]) -> Partition:
        return filter_origin(self.live, self.ip_kb(), frozenset(params["keep"]))

    def _stage_vulnerable_eliminator(self, params: dict[str, Any]) -> Partition:
        return eliminate_vulnerable(self.live, self.ip_kb())

    def _stage_deduplicator(self, params: dict[str, Any]) -> Partition:
        return deduplicate(self.live, DedupMode(params["mode"]))

    def _stage_syntactic_corrector(self, params: dict[str, Any]) -> Partition:
        trusted: list[CuratedQuery] = []
        for query in self.live:
            if query.parse_status is ParseStatus.FAILED:
                repair = correct_syntax(query.text)
                if not repair.issues:
                    parsed = parse_query(repair.text)
                    assert isinstance(parsed, ParsedQuery)
                    query = query.with_parse(
                        parsed,
                        extract_features(parsed),
                        text=repair.text,
                        repaired=True,
                    )
                    query = mark(query, "SyntacticCorrector", True, "Repaired")
                else:
                    query = mark(query, "SyntacticCorrector", True)
            else:
                query = mark(query, "SyntacticCorrector", True)
            trusted.append(query)
        return Partition(
            operator="SyntacticCorrector",
            trusted=tuple(trusted),
            untrusted=(),
            outcome=OperatorOutcome(
                operator="SyntacticCorrector",
                input_count=len(trusted),
                trusted=tuple(q.id for q in trusted),
                untrusted=(),
                rate_of_trust=Fraction(0),
            ),
        )

    def _stage_semantic_corrector(self, params: dict[str, Any]) -> Partition:
        vocab = self.vocabulary()
        trusted: list[CuratedQuery] = []
        for query in self.live:
            if vocab is not None and query.parsed is not None:
                corrected, repairs = correct_semantics(
                    query.parsed, vocab, int(params["max_distance"])
                )
                fixes = [r for r in repairs if r.status == "Repaired"]
                if fixes:
                    text = query.text
                    for fix in fixes:
                        assert fix.replacement is not None
                        written = _written_form(fix.original, fix.replacement)
                        text = re.sub(
                            re.escape(fix.original) + _TERM_BOUNDARY,
                            lambda _m, w=written: w,
                            text,
                        )
                    reparsed = parse_query(text)
                    if isinstance(reparsed, ParsedQuery):
                        query = query.with_parse(
                            reparsed, extract_features(reparsed), text=text
                        )
                    else:  # substitution produced something odd; keep structure
                        query = replace(
                            query,
                            parsed=corrected,
                            features=extract_features(corrected),
                        )
                    query = mark(query, "SemanticCorrector", True, "Repaired")
                else:
                    query = mark(query, "SemanticCorrector", True)
            else:
                query = mark(query, "SemanticCorrector", True)
            trusted.append(query)
        return Partition(
            operator="SemanticCorrector",
            trusted=tuple(trusted),
            untrusted=(),
            outcome=OperatorOutcome(
                operator="SemanticCorrector",
                input_count=len(trusted),
                trusted=tuple(q.id for q in trusted),
                untrusted=(),
                rate_of_trust=Fraction(0),
            ),
        )

    def _stage_topic_clustering(self, params: dict[str, Any]) -> Partition:
        keep = params["keep"]
        return cluster_topics(
            self.live,
            self.topic_base(),
            keep=None if keep is None else frozenset(keep),
        )

    def _stage_schema_ranking(self, params: dict[str, Any]) -> Partition:
        return rank_schema(self.live, float(params["threshold"]))

    def _stage_complexity_filter(self, params: dict[str, Any]) -> Partition:
        return filter_complexity(
            self.live,
            keep_shapes=frozenset(
                QueryShape(shape) for shape in params["keep_shapes"]
            ),
            min_depth=int(params["min_depth"]),
            max_depth=(
                None if params["max_depth"] is None else int(params["max_depth"])
            ),
        )

    def _stage_expertise_filter(self, params: dict[str, Any]) -> Partition:
        return filter_expertise(self.live, frozenset(params["keep"]))

    def _stage_analytic_selector(self, params: dict[str, Any]) -> Partition:
        return select_analytic(self.live, params["keep"])

    def _stage_logs_join(self, params: dict[str, Any]) -> Partition:
        target = self._target_log()
        for donor_id, queries in self.donors.items():
            donor = QueryLog(
                id=donor_id, source_dataset=donor_id, entries=tuple(queries)
            )
            for pair in join_logs(target, donor, float(params["threshold"])):
                self.join_pairs.append(
                    (pair.left_id, pair.right_id, pair.similarity)
                )
        trusted = tuple(mark(q, "LogsJoin", True) for q in self.live)
        return Partition(
            operator="LogsJoin",
            trusted=trusted,
            untrusted=(),
            outcome=OperatorOutcome(
                operator="LogsJoin",
                input_count=len(trusted),
                trusted=tuple(q.id for q in trusted),
                untrusted=(),
                rate_of_trust=Fraction(0),
            ),
        )

    def _stage_logs_enrichment(self, params: dict[str, Any]) -> Partition:
        target = self._target_log()
        donor_logs = [
            QueryLog(id=donor_id, source_dataset=donor_id, entries=tuple(queries))
            for donor_id, queries in self.donors.items()
        ]
        adopted, rejected = adopt_candidates(
            target, donor_logs, float(params["threshold"])
        )
        kept = [mark(q, "LogsEnrichment", True) for q in self.live]
        trusted = tuple(kept) + tuple(adopted)
        self.donors.clear()
        return Partition(
            operator="LogsEnrichment",
            trusted=trusted,
            untrusted=tuple(rejected),
            outcome=OperatorOutcome(
                operator="LogsEnrichment",
                input_count=len(trusted) + len(rejected),
                trusted=tuple(q.id for q in trusted),
                untrusted=tuple(q.id for q in rejected),
                rate_of_trust=rate_of_trust(
                    len(trusted) + len(rejected), len(trusted)
                ),
            ),
        )

    def _stage_load(self, params: dict[str, Any]) -> Partition:
        trusted = tuple(mark(q, "Load", True) for q in self.live)
        self.live = list(trusted)
        run_id = self.spec.run_id
        if self.conn is not None:
            load_to_store(self.conn, run_id, trusted)
        output = self.spec.output
        if output is not None:
            if output.format == "sqlite":
                conn = open_store(output.path)
                try:
                    record_run(conn, run_id)
                    load_to_store(conn, run_id, trusted)
                finally:
                    conn.close()
            else:
                export_queries(trusted, output.path, ExportFormat(output.format))
        return Partition(
            operator="Load",
            trusted=trusted,
            untrusted=(),
            outcome=OperatorOutcome(
                operator="Load",
                input_count=len(trusted),
                trusted=tuple(q.id for q in trusted),
                untrusted=(),
                rate_of_trust=Fraction(0),
            ),
        )

    def _target_log(self) -> QueryLog:
        target_id = self.spec.inputs[0].source_dataset
        return QueryLog(
            id=target_id, source_dataset=target_id, entries=tuple(self.live)
        )

    # -- resume support -------------------------------------------------------

    def replay(self, run_id: str, stages: Sequence[str]) -> None:
        """Rebuild the post-checkpoint state without re-running operators."""
        assert self.conn is not None
        pool: dict[str, CuratedQuery] = {q.id: q for q in self.live}
        for queries in self.donors.values():
            pool.update({q.id: q for q in queries})
        target_id = self.spec.inputs[0].source_dataset
        for name in stages:
            payload = read_checkpoint(self.conn, run_id, name)
            if payload is None:
                raise MissingCheckpoint(
                    f"run {run_id!r} has no checkpoint for stage {name!r}"
                )
            for query_id, text in payload["text_overrides"].items():
                query = pool.get(query_id)
                if query is None or query.text == text:
                    continue
                parsed = parse_query(text)
                if isinstance(parsed, ParsedQuery):
                    pool[query_id] = query.with_parse(
                        parsed,
                        extract_features(parsed),
                        text=text,
                        repaired=(name == "SyntacticCorrector"),
                    )
            for query_id in payload["adopted"]:
                query = pool.get(query_id)
                if query is not None:
                    pool[query_id] = replace(query, source_log=target_id)
            for query_id, notes in payload["annotations"].items():
                query = pool.get(query_id)
                if query is None:
                    continue
                rebuilt = tuple(
                    TrustAnnotation(
                        operator=op,
                        kind=DegreeKind(kind),
                        value=int(value) if kind == "boolean" else value,
                        applied_at=datetime.fromisoformat(stamp),
                    )
                    for op, kind, value, stamp in notes
                )
                pool[query_id] = replace(
                    query, annotations=query.annotations + rebuilt
                )
            trusted_ids = [qid for qid in payload["trusted"] if qid in pool]
            self.live = [pool[qid] for qid in trusted_ids]
            if name == "LogsEnrichment":
                self.donors.clear()
            if name == "LogsJoin":
                self.join_pairs = [
                    (a, b, float(s)) for a, b, s in payload["join_pairs"]
                ]
            outcome = OperatorOutcome(
                operator=name,
                input_count=payload["input_count"],
                trusted=tuple(payload["trusted"]),
                untrusted=tuple(payload["untrusted"]),
                rate_of_trust=rate_of_trust(
                    payload["input_count"], len(payload["trusted"])
                ),
                duration_ms=payload["duration_ms"],
            )
            self.outcomes.append(outcome)
            self.records[name] = StageRecord(
                outcome=outcome,
                trusted_sample=tuple(self.live[:SAMPLE_LIMIT]),
                untrusted_sample=(),
            )


def _snake(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def run_pipeline(
    spec: PipelineSpec,
    progress: Callable[[str, int], None] | None = None,
) -> PipelineResult:
    """Execute a pipeline end to end and return its result."""
    order = spec.order()
    execution = _Execution(spec, progress)
    try:
        if execution.conn is not None:
            record_run(
                execution.conn, spec.run_id, yaml.safe_dump(spec.to_dict())
            )
        execution.prepare()
        return execution.execute(order)
    finally:
        if execution.conn is not None:
            execution.conn.close()


def resume(
    store_path: str | Path,
    run_id: str,
    from_stage: str | None = None,
    progress: Callable[[str, int], None] | None = None,
) -> PipelineResult:
    """Continue (or re-run the tail of) a checkpointed run.

    With ``from_stage`` the named stage and everything after it re-execute
    from the preceding checkpoint; without it, execution continues after
    the last checkpoint — or, if the run already finished, the stored
    result is rebuilt without re-running anything.
    """
    conn = open_store(store_path)
    try:
        row = conn.execute(
            "SELECT spec_yaml FROM runs WHERE run_id = ?", (run_id,)
        ).fetchone()
        if row is None or row["spec_yaml"] is None:
            raise UnknownRun(f"no stored run named {run_id!r}")
        spec = spec_from_dict(yaml.safe_load(row["spec_yaml"]))
        done = list_checkpoints(conn, run_id)
    finally:
        conn.close()
    order = spec.order()
    if from_stage is None:
        start = len(done)
    else:
        if from_stage not in order:
            raise UnknownOperator(
                f"{from_stage!r} is not part of run {run_id!r}"
            )
        start = order.index(from_stage)
        if len(done) < start:
            raise MissingCheckpoint(
                f"cannot restart at {from_stage!r}: only {len(done)} of the "
                f"{start} preceding stages are checkpointed"
            )
    execution = _Execution(spec, progress)
    try:
        execution.prepare()
        execution.replay(run_id, order[:start])
        return execution.execute(order, start_at=start)
    finally:
        if execution.conn is not None:
            execution.conn.close()
