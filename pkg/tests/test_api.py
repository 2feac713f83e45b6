"""HTTP control plane: define, launch, poll, inspect."""
from __future__ import annotations

import time
from dataclasses import replace

from fastapi.testclient import TestClient

from tcurator.api import create_app
from tcurator.engine import CANONICAL_ORDER, run_pipeline
from tcurator.metrics import stats_to_dict


def client_for(tmp_path) -> TestClient:
    return TestClient(create_app(db_path=str(tmp_path / "api-store.sqlite")))


def define(client: TestClient, spec) -> dict:
    response = client.post("/pipelines", json=spec.to_dict())
    assert response.status_code == 201, response.text
    return response.json()


def wait_finished(client: TestClient, run_id: str, timeout: float = 60.0) -> dict:
    deadline = time.monotonic() + timeout
    body: dict = {}
    while time.monotonic() < deadline:
        body = client.get(f"/runs/{run_id}").json()
        if body["status"] in {"Done", "Failed"}:
            return body
        time.sleep(0.05)
    raise AssertionError(f"run {run_id!r} never finished: {body}")


def run_to_done(client: TestClient, spec) -> dict:
    define(client, spec)
    launched = client.post(f"/pipelines/{spec.run_id}/run")
    assert launched.status_code == 202
    body = wait_finished(client, spec.run_id)
    assert body["status"] == "Done", body
    return body


def test_operator_catalogue(tmp_path):
    client = client_for(tmp_path)
    body = client.get("/operators").json()
    names = [entry["name"] for entry in body["operators"]]
    assert tuple(names) == CANONICAL_ORDER
    by_name = {entry["name"]: entry for entry in body["operators"]}
    assert by_name["ExpertiseFilter"]["requires"] == ["ComplexityFilter"]
    assert by_name["LogsEnrichment"]["needs_second_log"] is True
    assert "threshold" in by_name["LogsEnrichment"]["params"]
    for entry in body["operators"]:
        assert entry["summary"]


def test_define_launch_and_poll(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    created = define(client, fixture_spec)
    assert created == {
        "run_id": fixture_spec.run_id,
        "status": "Pending",
        "order": list(fixture_spec.order()),
    }

    launched = client.post(f"/pipelines/{fixture_spec.run_id}/run")
    assert launched.status_code == 202
    assert launched.json() == {"run_id": fixture_spec.run_id, "status": "Running"}

    body = wait_finished(client, fixture_spec.run_id)
    assert body["status"] == "Done"
    assert body["stage"] == "Load"
    assert body["completed"] == list(fixture_spec.order())
    assert body["error"] is None


def test_define_rejects_invalid_spec(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    payload = fixture_spec.to_dict()
    payload["operators"] = ["Extract", "ExpertiseFilter", "Load"]
    response = client.post("/pipelines", json=payload)
    assert response.status_code == 400
    assert "ComplexityFilter" in response.json()["detail"]


def test_duplicate_run_id_conflicts(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    define(client, fixture_spec)
    response = client.post("/pipelines", json=fixture_spec.to_dict())
    assert response.status_code == 409
    assert "already defined" in response.json()["detail"]


def test_unknown_run_is_404(tmp_path):
    client = client_for(tmp_path)
    for path in ("/runs/ghost", "/runs/ghost/stats", "/runs/ghost/result"):
        assert client.get(path).status_code == 404
    assert client.post("/pipelines/ghost/run").status_code == 404


def test_relaunch_conflicts(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    run_to_done(client, fixture_spec)
    response = client.post(f"/pipelines/{fixture_spec.run_id}/run")
    assert response.status_code == 409
    assert "not Pending" in response.json()["detail"]


def test_results_wait_for_completion(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    define(client, fixture_spec)
    for path in ("stats", "result"):
        response = client.get(f"/runs/{fixture_spec.run_id}/{path}")
        assert response.status_code == 409
        assert "Pending" in response.json()["detail"]


def test_stats_match_the_run(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    run_to_done(client, fixture_spec)
    stats = client.get(f"/runs/{fixture_spec.run_id}/stats").json()
    assert stats["run_id"] == fixture_spec.run_id
    assert stats["final_trusted"] == 5
    assert stats["overall_rate_of_trust"] == 0.75
    assert [row["name"] for row in stats["operators"]] == list(fixture_spec.order())
    robot = next(row for row in stats["operators"] if row["name"] == "RobotCleaner")
    assert (robot["input"], robot["trusted"], robot["untrusted"]) == (20, 7, 13)


def test_failed_run_surfaces_the_error(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    bad = tmp_path / "bad-blacklist.txt"
    bad.write_text("not an address\n", encoding="utf-8")
    spec = replace(
        fixture_spec,
        run_id="api-broken",
        knowledge=replace(fixture_spec.knowledge, blacklist=str(bad)),
    )
    define(client, spec)
    client.post(f"/pipelines/{spec.run_id}/run")
    body = wait_finished(client, spec.run_id)
    assert body["status"] == "Failed"
    assert "BusinessAcademic" in body["error"]

    response = client.get(f"/runs/{spec.run_id}/stats")
    assert response.status_code == 409
    assert "failed" in response.json()["detail"]


def test_stage_sample(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    run_to_done(client, fixture_spec)
    base = f"/runs/{fixture_spec.run_id}/operators"

    body = client.get(f"{base}/RobotCleaner/sample", params={"n": 3}).json()
    assert body["operator"] == "RobotCleaner"
    assert 1 <= len(body["trusted"]) <= 3
    assert 1 <= len(body["untrusted"]) <= 3
    for record in body["trusted"] + body["untrusted"]:
        assert set(record) == {"id", "source_log", "text", "ip", "timestamp"}

    assert client.get(f"{base}/Nonsense/sample").status_code == 404
    assert client.get(f"{base}/RobotCleaner/sample", params={"n": 0}).status_code == 422


def test_stage_sample_before_launch(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    define(client, fixture_spec)
    response = client.get(
        f"/runs/{fixture_spec.run_id}/operators/RobotCleaner/sample"
    )
    assert response.status_code == 409


def test_result_paging(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    run_to_done(client, fixture_spec)
    url = f"/runs/{fixture_spec.run_id}/result"

    full = client.get(url).json()
    assert full["total"] == 5
    assert len(full["queries"]) == 5
    for record in full["queries"]:
        assert record["annotations"], record["id"]
        for note in record["annotations"]:
            assert set(note) == {"operator", "kind", "value"}

    paged: list[str] = []
    for offset in (0, 2, 4):
        page = client.get(url, params={"limit": 2, "offset": offset}).json()
        assert page["offset"] == offset
        paged.extend(record["id"] for record in page["queries"])
    assert paged == [record["id"] for record in full["queries"]]
    assert client.get(url, params={"offset": 99}).json()["queries"] == []


def test_api_and_direct_runs_agree(tmp_path, fixture_spec):
    direct = run_pipeline(
        replace(fixture_spec, store=str(tmp_path / "direct.sqlite"))
    )

    client = client_for(tmp_path)
    run_to_done(client, fixture_spec)
    stats = client.get(f"/runs/{fixture_spec.run_id}/stats").json()
    result = client.get(f"/runs/{fixture_spec.run_id}/result").json()

    expected = stats_to_dict(direct.stats)
    for row in (*stats["operators"], *expected["operators"]):
        row["duration_ms"] = 0
    assert stats == expected
    assert [q["id"] for q in result["queries"]] == [q.id for q in direct.survivors]


def test_store_path_falls_back_to_the_service_default(tmp_path, fixture_spec):
    client = client_for(tmp_path)
    spec = replace(fixture_spec, store=None, stats_out=None)
    run_to_done(client, spec)
    assert (tmp_path / "api-store.sqlite").exists()
