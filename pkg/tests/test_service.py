"""HTTP API contract: queue, labels round trip, IRR, projection, report."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from labelcycle.pipeline import CycleConfig, run_cycle_round
from labelcycle.service import build_app
from labelcycle.store import CorpusStore, LabelRecord

from synthcorpus import two_topic_posts

FAST = dict(
    kind="cbow", dim=24, window=3, epochs=4, min_count=2, bucket_count=2048,
    k=2, min_labeled=3, folds=4, queue_size=10,
)


@pytest.fixture()
def ready_state(tmp_path):
    """State dir with one bootstrap round completed."""
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text(
        "".join(json.dumps(r) + "\n" for r in two_topic_posts()), encoding="utf-8"
    )
    store = CorpusStore.ingest(corpus, tmp_path / "state")
    run_cycle_round(store, CycleConfig(**FAST))
    return tmp_path / "state"


@pytest.fixture()
def client(ready_state):
    return TestClient(build_app(ready_state))


def test_queue_limit_and_fields(client):
    resp = client.get("/api/queue?limit=3")
    assert resp.status_code == 200
    body = resp.json()
    assert body["round"] == 1
    assert len(body["items"]) == 3
    item = body["items"][0]
    for key in ("post_id", "cluster_id", "cluster_size", "histogram",
                "suggestion", "raw_text", "cleaned_tokens", "source_hashtags"):
        assert key in item
    assert item["cleaned_tokens"]  # joined from the round's cleaned corpus


def test_label_round_trip(client):
    queue = client.get("/api/queue?limit=1").json()["items"]
    post_id = queue[0]["post_id"]
    resp = client.post(
        "/api/labels",
        json={"post_id": post_id, "value": "yes", "rater_id": "r1"},
    )
    assert resp.status_code == 201
    record = resp.json()
    assert record["post_id"] == post_id
    assert record["value"] == "yes"
    assert record["source"] == "manual"
    assert record["round"] == 1  # defaults to the active round

    listed = client.get(f"/api/labels?post_id={post_id}").json()["records"]
    assert any(r["value"] == "yes" and r["rater_id"] == "r1" for r in listed)

    # the labeled post leaves the queue immediately
    ids = [i["post_id"] for i in client.get("/api/queue?limit=50").json()["items"]]
    assert post_id not in ids


def test_label_unknown_post_404(client):
    resp = client.post(
        "/api/labels", json={"post_id": "nope", "value": "yes", "rater_id": "r1"}
    )
    assert resp.status_code == 404
    body = resp.json()
    assert body["code"] == "not_found" and "nope" in body["message"]


def test_label_validation_400(client):
    bad_bodies = [
        {"post_id": "s000", "value": "absolutely", "rater_id": "r1"},
        {"post_id": "s000", "value": "yes"},
        {"post_id": "s000", "value": "yes", "rater_id": "r1", "basis": "vibes"},
        {"post_id": "s000", "value": "yes", "rater_id": "r1", "round": -2},
    ]
    for body in bad_bodies:
        resp = client.post("/api/labels", json=body)
        assert resp.status_code == 400, body
        assert resp.json()["code"] == "bad_request"


def test_clusters_view(client):
    resp = client.get("/api/clusters")
    assert resp.status_code == 200
    body = resp.json()
    assert body["round"] == 1 and body["k"] == 2
    assert len(body["clusters"]) == 2
    assert sum(body["sizes"]) == 60


def test_irr_endpoint(ready_state):
    store = CorpusStore(ready_state)
    pids = sorted(store.posts)[:6]
    for pid in pids:
        store.record_label(LabelRecord(post_id=pid, value="yes", rater_id="ra",
                                       basis="post_only", source="manual", round=1))
    for i, pid in enumerate(pids):
        value = "yes" if i < 5 else "no"
        store.record_label(LabelRecord(post_id=pid, value=value, rater_id="rb",
                                       basis="post_only", source="manual", round=1))
    client = TestClient(build_app(ready_state))
    body = client.get("/api/irr").json()
    assert body["rater_a"] == "ra" and body["rater_b"] == "rb"
    all_row = next(s for s in body["strata"] if s["stratum"] == "all")
    assert all_row["comparable"] == 6 and all_row["same"] == 5

    resp = client.get("/api/irr?basis=post_plus_profile")
    assert resp.status_code == 400  # no labels at all on that basis


def test_irr_single_rater_is_explained(client):
    resp = client.get("/api/irr")
    assert resp.status_code == 400
    assert "two raters" in resp.json()["message"]


def test_projection_endpoint(ready_state, client):
    resp = client.get("/api/projection")
    assert resp.status_code == 404
    assert "project" in resp.json()["message"]

    from labelcycle.cli import main

    rc = main(["project", "--state-dir", str(ready_state), "--method", "pca"])
    assert rc == 0
    body = client.get("/api/projection").json()
    assert body["round"] == 1 and body["method"] == "pca"
    assert len(body["points"]) == 60
    assert {"post_id", "x", "y", "cluster_id", "label"} <= set(body["points"][0])


def test_report_endpoint(client):
    body = client.get("/api/report").json()
    assert body["schema"] == "cycle-report/1"
    assert body["rounds"][0]["round"] == 1


def test_rubric_endpoint(client):
    body = client.get("/api/rubric").json()
    ids = [r["rule_id"] for r in body["rules"]]
    assert "R1" in ids and "R2C3" in ids
    r1 = next(r for r in body["rules"] if r["rule_id"] == "R1")
    assert r1["executable"] is True
    assert set(body["lexicon_classes"]) == {"yes", "maybe", "no", "unknown"}


def test_empty_state_views(tmp_path):
    corpus = tmp_path / "c.jsonl"
    corpus.write_text(
        "".join(json.dumps(r) + "\n" for r in two_topic_posts(per_topic=3)),
        encoding="utf-8",
    )
    CorpusStore.ingest(corpus, tmp_path / "state")
    client = TestClient(build_app(tmp_path / "state"))
    assert client.get("/api/clusters").status_code == 404
    assert client.get("/api/report").status_code == 404
    body = client.get("/api/queue").json()
    assert body["round"] is None and body["items"] == []
