"""HTTP control plane: define pipelines, launch runs, inspect results.

One worker thread per run; run state lives in process memory while the
curated output and checkpoints go to the configured SQLite store.
"""
from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse

from .engine import (
    InvalidConfig,
    PipelineResult,
    PipelineSpec,
    StageFailure,
    describe_operators,
    run_pipeline,
    spec_from_dict,
)
from .metrics import stats_to_dict
from .model import CuratedQuery


@dataclass
class RunState:
    spec: PipelineSpec
    order: tuple[str, ...]
    status: str = "Pending"  # Pending | Running | Done | Failed
    completed: list[str] = field(default_factory=list)
    result: PipelineResult | None = None
    error: str | None = None


def _query_record(query: CuratedQuery, with_annotations: bool = False) -> dict:
    record = {
        "id": query.id,
        "source_log": query.source_log,
        "text": query.text,
        "ip": query.ip,
        "timestamp": query.timestamp.isoformat(),
    }
    if with_annotations:
        record["annotations"] = [
            {"operator": note.operator, "kind": note.kind.value, "value": note.value}
            for note in query.annotations
        ]
    return record


def create_app(db_path: str | None = None) -> FastAPI:
    app = FastAPI(title="tcurator", version="0.1.0")
    runs: dict[str, RunState] = {}
    lock = threading.Lock()

    def _get_run(run_id: str) -> RunState:
        with lock:
            state = runs.get(run_id)
        if state is None:
            raise HTTPException(status_code=404, detail=f"no run named {run_id!r}")
        return state

    @app.get("/operators")
    def operators() -> dict:
        return {"operators": describe_operators()}

    @app.post("/pipelines", status_code=201)
    def define_pipeline(body: dict[str, Any]) -> dict:
        try:
            spec = spec_from_dict(body)
        except InvalidConfig as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if spec.store is None and db_path is not None:
            spec = replace(spec, store=db_path)
        with lock:
            if spec.run_id in runs:
                raise HTTPException(
                    status_code=409,
                    detail=f"run {spec.run_id!r} is already defined",
                )
            state = RunState(spec=spec, order=spec.order())
            runs[spec.run_id] = state
        return {
            "run_id": spec.run_id,
            "status": state.status,
            "order": list(state.order),
        }

    def _execute(state: RunState) -> None:
        def progress(name: str, position: int) -> None:
            state.completed.append(name)

        try:
            state.result = run_pipeline(state.spec, progress=progress)
            state.status = "Done"
        except StageFailure as exc:
            state.status = "Failed"
            state.error = str(exc)
        except Exception as exc:  # surfaced via GET /runs, not lost in a thread
            state.status = "Failed"
            state.error = f"internal: {exc}"

    @app.post("/pipelines/{run_id}/run", status_code=202)
    def launch(run_id: str) -> dict:
        state = _get_run(run_id)
        with lock:
            if state.status != "Pending":
                raise HTTPException(
                    status_code=409,
                    detail=f"run {run_id!r} is {state.status}, not Pending",
                )
            state.status = "Running"
        thread = threading.Thread(
            target=_execute, args=(state,), name=f"run-{run_id}", daemon=True
        )
        thread.start()
        return {"run_id": run_id, "status": "Running"}

    @app.get("/runs/{run_id}")
    def run_status(run_id: str) -> dict:
        state = _get_run(run_id)
        return {
            "run_id": run_id,
            "status": state.status,
            "stage": state.completed[-1] if state.completed else None,
            "completed": list(state.completed),
            "order": list(state.order),
            "error": state.error,
        }

    def _finished(state: RunState, run_id: str) -> PipelineResult:
        if state.status == "Failed":
            raise HTTPException(
                status_code=409, detail=f"run {run_id!r} failed: {state.error}"
            )
        if state.status != "Done" or state.result is None:
            raise HTTPException(
                status_code=409,
                detail=f"run {run_id!r} is {state.status}; results appear once Done",
            )
        return state.result

    @app.get("/runs/{run_id}/stats")
    def run_stats(run_id: str) -> dict:
        result = _finished(_get_run(run_id), run_id)
        return stats_to_dict(result.stats)

    @app.get("/runs/{run_id}/operators/{name}/sample")
    def stage_sample(
        run_id: str, name: str, n: int = Query(default=10, ge=1, le=100)
    ) -> dict:
        state = _get_run(run_id)
        if name not in state.order:
            raise HTTPException(
                status_code=404, detail=f"{name!r} is not part of this run"
            )
        record = None
        if state.result is not None:
            record = state.result.stages.get(name)
        if record is None:
            raise HTTPException(
                status_code=409, detail=f"stage {name!r} has not completed"
            )
        return {
            "run_id": run_id,
            "operator": name,
            "trusted": [_query_record(q) for q in record.trusted_sample[:n]],
            "untrusted": [_query_record(q) for q in record.untrusted_sample[:n]],
        }

    @app.get("/runs/{run_id}/result")
    def run_result(
        run_id: str,
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ) -> dict:
        result = _finished(_get_run(run_id), run_id)
        window = result.survivors[offset : offset + limit]
        return {
            "run_id": run_id,
            "total": len(result.survivors),
            "offset": offset,
            "queries": [_query_record(q, with_annotations=True) for q in window],
        }

    @app.exception_handler(Exception)
    async def unhandled(_, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(dist), html=True), name="ui")

    return app


app = create_app(db_path=os.environ.get("TCURATOR_DB"))
