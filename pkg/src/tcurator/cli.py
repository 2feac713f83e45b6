"""Command-line entry point: run a pipeline or serve the HTTP API.

Exit codes for ``run``: 1 — invalid configuration, 2 — unreadable input,
3 — an operator failed mid-pipeline.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .engine import (
    CANONICAL_ORDER,
    InvalidConfig,
    PipelineSpec,
    StageFailure,
    load_config,
    run_pipeline,
    spec_from_dict,
)
from .metrics import format_rate_percent

DEFAULT_ADDR = "127.0.0.1:8712"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcurator",
        description="Curate SPARQL query logs through a trust-operator pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a curation pipeline")
    run.add_argument("--config", help="pipeline YAML; overrides the quick flags")
    run.add_argument(
        "--input",
        action="append",
        default=[],
        help="log file (repeatable; the first is the target log)",
    )
    run.add_argument(
        "--format",
        choices=["combined", "tsv"],
        default="combined",
        help="input log format (quick mode, applies to every --input)",
    )
    run.add_argument("--out", help="output file for the trusted queries")
    run.add_argument(
        "--out-format",
        choices=["ndjson", "text", "sqlite"],
        default="ndjson",
    )
    run.add_argument("--stats-out", help="where to write the statistics YAML")
    run.add_argument("--run-id", default="cli-run")
    run.add_argument("--blacklist", help="blacklisted addresses, one per line")
    run.add_argument("--orgmap", help="organization map CSV")
    run.add_argument("--topics", help="topic base CSV")
    run.add_argument("--vocab", help="vocabulary file, one IRI per line")
    run.add_argument("--db", help="SQLite store for checkpoints and results")
    run.add_argument(
        "--dry-run",
        action="store_true",
        help="print the canonical stage order and exit",
    )

    serve = sub.add_parser("serve", help="serve the HTTP API")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--db", default=None, help="SQLite store path")
    return parser


def _quick_spec(args: argparse.Namespace) -> PipelineSpec:
    if not args.input:
        raise InvalidConfig("run needs --config or at least one --input")
    operators = [name for name in CANONICAL_ORDER]
    if len(args.input) < 2:
        operators = [
            name for name in operators if name not in ("LogsJoin", "LogsEnrichment")
        ]
    data = {
        "run_id": args.run_id,
        "inputs": [
            {
                "path": path,
                "format": args.format,
                "source_dataset": f"{Path(path).stem}-{n}" if n else Path(path).stem,
            }
            for n, path in enumerate(args.input)
        ],
        "knowledge_bases": {
            "blacklist": args.blacklist,
            "org_map": args.orgmap,
            "topics": args.topics,
            "vocabulary": args.vocab,
        },
        "store": args.db,
        "output": (
            {"path": args.out, "format": args.out_format} if args.out else None
        ),
        "stats_out": args.stats_out,
        "operators": operators,
    }
    return spec_from_dict(data)


def _run(args: argparse.Namespace) -> int:
    try:
        spec = load_config(args.config) if args.config else _quick_spec(args)
        order = spec.order()
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.dry_run:
        for position, name in enumerate(order, start=1):
            print(f"{position:2d}. {name}")
        return 0
    try:
        result = run_pipeline(spec)
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.__cause__, OSError) else 3
    width = max(len(row.name) for row in result.stats.per_operator)
    for row in result.stats.per_operator:
        print(
            f"{row.name:<{width}}  in={row.input:<8d} trusted={row.trusted:<8d} "
            f"untrusted={row.untrusted:<8d} rate={format_rate_percent(row.rate)}"
        )
    print(
        f"final: {result.stats.final_trusted} trusted queries, "
        f"overall rate {format_rate_percent(result.stats.overall_rate)}"
    )
    return 0


def _serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    addr = os.environ.get("TCURATOR_ADDR", DEFAULT_ADDR)
    env_host, _, env_port = addr.partition(":")
    host = args.host or env_host or "127.0.0.1"
    port = args.port or int(env_port or 8712)
    db = args.db or os.environ.get("TCURATOR_DB")
    uvicorn.run(create_app(db_path=db), host=host, port=port)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    return _serve(args)


if __name__ == "__main__":
    sys.exit(main())
