"""Cycle orchestration: staging, determinism, crash safety, queueing."""

import json
import os
import signal
import subprocess
import sys
import textwrap
from pathlib import Path

import pytest

from labelcycle.errors import DataError
from labelcycle.ioutil import canonical_json, file_digest
from labelcycle.pipeline import (
    CycleConfig,
    build_queue,
    completed_rounds,
    cycle_report,
    irr_view,
    latest_round,
    load_manifest,
    load_round_artifact,
    queue_view,
    render_report_text,
    round_dir,
    run_cycle_round,
)
from labelcycle.propagation import PropagationPolicy
from labelcycle.store import CorpusStore, LabelRecord

from synthcorpus import two_topic_posts

# Small enough to keep a full round under a second.
FAST = dict(
    kind="cbow", dim=24, window=3, epochs=4, min_count=2, bucket_count=2048,
    k=2, min_labeled=3, folds=4, queue_size=10,
)

SEED_LABELS = [
    ("s000", "yes"), ("s001", "yes"), ("s002", "yes"), ("s003", "yes"),
    ("b000", "no"), ("b001", "no"), ("b002", "no"), ("b003", "no"),
]


def write_corpus(path: Path, rows=None) -> Path:
    rows = rows if rows is not None else two_topic_posts()
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


def fresh_store(tmp_path: Path, name: str = "state") -> CorpusStore:
    corpus = write_corpus(tmp_path / "corpus.jsonl")
    return CorpusStore.ingest(corpus, tmp_path / name)


def seed_labels(store: CorpusStore, round_id: int = 1) -> None:
    for pid, val in SEED_LABELS:
        store.record_label(
            LabelRecord(post_id=pid, value=val, rater_id="r1", basis="post_only",
                        source="manual", round=round_id)
        )


def test_bootstrap_round_awaits_labels(tmp_path):
    store = fresh_store(tmp_path)
    state = run_cycle_round(store, CycleConfig(**FAST))
    assert state.round == 1
    assert state.stage == "awaiting_labels"
    assert 0 < len(state.queue) <= FAST["queue_size"]
    # suggestion seeding: topic-A posts carry a yes-class hashtag
    for item in state.queue:
        if item["post_id"].startswith("s"):
            assert item["suggestion"] == {
                "value": "yes", "rule_id": "R1", "matched_tags": ["sailinglife"],
            }
    cv = load_round_artifact(store.state_dir, 1, "cv.json")
    assert cv["applicable"] is False and cv["mean_accuracy"] is None


def test_labeled_round_propagates_and_reports(tmp_path):
    store = fresh_store(tmp_path)
    run_cycle_round(store, CycleConfig(**FAST))
    seed_labels(store)
    state = run_cycle_round(store, CycleConfig(**FAST))
    assert state.round == 2
    # both topic clusters are unanimous, so everything gets labeled
    prop = load_round_artifact(store.state_dir, 2, "propagation.json")
    assert prop["report"]["newly_labeled"] == 52
    assert state.stage == "propagated" and state.queue == []
    cv = load_round_artifact(store.state_dir, 2, "cv.json")
    assert cv["applicable"] is True and cv["mean_accuracy"] == 1.0

    report = cycle_report(store)
    assert [r["round"] for r in report["rounds"]] == [1, 2]
    assert report["rounds"][1]["labeled_fraction"] == 1.0
    assert report["rounds"][0]["cv_accuracy"] is None


def test_report_text_matches_json(tmp_path):
    store = fresh_store(tmp_path)
    run_cycle_round(store, CycleConfig(**FAST))
    seed_labels(store)
    run_cycle_round(store, CycleConfig(**FAST))
    report = cycle_report(store)
    text = render_report_text(report)
    for row in report["rounds"]:
        assert str(row["round"]) in text
        assert row["model"] in text
        assert str(row["newly_labeled"]) in text
        acc = "N/A" if row["cv_accuracy"] is None else f"{row['cv_accuracy']:.4f}"
        assert acc in text
    assert str(report["n_posts"]) in text


def test_rerun_reproduces_artifact_digests(tmp_path):
    manifests = []
    for name in ("a", "b"):
        corpus = write_corpus(tmp_path / f"corpus_{name}.jsonl")
        store = CorpusStore.ingest(corpus, tmp_path / name)
        seed_labels(store, round_id=0)
        run_cycle_round(store, CycleConfig(**FAST))
        manifests.append(load_manifest(tmp_path / name, 1))
    assert manifests[0]["artifacts"] == manifests[1]["artifacts"]
    assert manifests[0] == manifests[1]  # timestamps pinned in deterministic mode


def test_manifest_digests_match_files(tmp_path):
    store = fresh_store(tmp_path)
    state = run_cycle_round(store, CycleConfig(**FAST))
    manifest = load_manifest(store.state_dir, 1)
    assert manifest["artifacts"] == state.artifacts
    for name, digest in manifest["artifacts"].items():
        assert file_digest(round_dir(store.state_dir, 1) / name) == digest


def test_queue_view_drops_freshly_labeled(tmp_path):
    store = fresh_store(tmp_path)
    state = run_cycle_round(store, CycleConfig(**FAST))
    first = state.queue[0]["post_id"]
    second = state.queue[1]["post_id"]
    store.record_label(LabelRecord(post_id=first, value="yes", rater_id="r1",
                                   basis="post_only", source="manual", round=1))
    store.record_label(LabelRecord(post_id=second, value="removed", rater_id="r1",
                                   basis="post_only", source="manual", round=1))
    ids = [item["post_id"] for item in queue_view(store)]
    assert first not in ids and second not in ids
    assert ids  # the rest of the queue is still there
    assert all("raw_text" in item for item in queue_view(store))


def test_queue_round_robins_across_clusters(tmp_path):
    store = fresh_store(tmp_path)
    # artificial 3-cluster split: sizes 30, 20, 10
    mapping = {}
    for i, pid in enumerate(sorted(store.posts)):
        mapping[pid] = 0 if i < 30 else (1 if i < 50 else 2)
    config = CycleConfig(**FAST)
    from labelcycle.pipeline import load_lexicon_for

    queue = build_queue(store, mapping, {}, PropagationPolicy(min_labeled=3),
                        config, load_lexicon_for(config))
    clusters = [item["cluster_id"] for item in queue]
    # biggest-first rank order, then one item per live cluster per pass
    assert clusters[:3] == [0, 1, 2] and clusters[3:6] == [0, 1, 2]


def test_removed_posts_never_requeued_or_relabeled(tmp_path):
    store = fresh_store(tmp_path)
    seed_labels(store, round_id=0)
    store.record_label(LabelRecord(post_id="s010", value="removed", rater_id="r1",
                                   basis="post_only", source="manual", round=0))
    state = run_cycle_round(store, CycleConfig(**FAST))
    assert "s010" not in [i["post_id"] for i in state.queue]
    prop = load_round_artifact(store.state_dir, 1, "propagation.json")
    assert "s010" not in [r["post_id"] for r in prop["records"]]


def test_cycle_requires_corpus(tmp_path):
    (tmp_path / "empty").mkdir()
    store = CorpusStore(tmp_path / "empty")
    with pytest.raises(DataError, match="no corpus"):
        run_cycle_round(store, CycleConfig(**FAST))


def test_no_retrain_reuses_prior_model(tmp_path, monkeypatch):
    store = fresh_store(tmp_path)
    run_cycle_round(store, CycleConfig(**FAST))

    def boom(*a, **kw):
        raise AssertionError("round 2 should not retrain")

    monkeypatch.setattr("labelcycle.pipeline.train_model", boom)
    state = run_cycle_round(store, CycleConfig(**FAST, retrain=False))
    assert state.round == 2


def test_irr_view_two_raters(tmp_path):
    store = fresh_store(tmp_path)
    pids = sorted(store.posts)[:10]
    for pid in pids:
        store.record_label(LabelRecord(post_id=pid, value="yes", rater_id="ra",
                                       basis="post_only", source="manual", round=0))
    for i, pid in enumerate(pids):
        value = "yes" if i < 8 else "no"
        store.record_label(LabelRecord(post_id=pid, value=value, rater_id="rb",
                                       basis="post_only", source="manual", round=0))
    view = irr_view(store)
    assert view["rater_a"] == "ra" and view["rater_b"] == "rb"
    all_stratum = next(s for s in view["strata"] if s["stratum"] == "all")
    assert all_stratum["comparable"] == 10 and all_stratum["same"] == 8
    assert all_stratum["percent_same"] == pytest.approx(80.0)
    # cohort strata exist because the two-topic corpus spans both cohorts
    names = {s["stratum"] for s in view["strata"]}
    assert "topic_flagged" in names or "control" in names


def test_irr_view_needs_two_raters(tmp_path):
    store = fresh_store(tmp_path)
    store.record_label(LabelRecord(post_id="s000", value="yes", rater_id="only",
                                   basis="post_only", source="manual", round=0))
    with pytest.raises(DataError, match="two raters"):
        irr_view(store)


# -- crash safety ---------------------------------------------------------------------

_CRASH_SCRIPT = textwrap.dedent(
    """
    import os, signal, sys
    sys.path.insert(0, {tests_dir!r})
    import labelcycle.pipeline as pipeline
    from labelcycle.pipeline import CycleConfig, run_cycle_round
    from labelcycle.store import CorpusStore

    mode = sys.argv[1]
    state_dir = sys.argv[2]

    if mode == "mid_artifacts":
        real = pipeline.cross_validate
        def dying(*a, **kw):
            os.kill(os.getpid(), signal.SIGKILL)
        pipeline.cross_validate = dying
    elif mode == "before_rename":
        real_rename = os.rename
        def dying(src, dst):
            if "round_" in str(dst):
                os.kill(os.getpid(), signal.SIGKILL)
            return real_rename(src, dst)
        os.rename = dying

    store = CorpusStore(state_dir)
    config = CycleConfig(kind="cbow", dim=24, window=3, epochs=4, min_count=2,
                         bucket_count=2048, k=2, min_labeled=3, folds=4,
                         queue_size=10)
    run_cycle_round(store, config)
    """
)


def _run_crasher(mode: str, state_dir: Path) -> int:
    script = _CRASH_SCRIPT.format(tests_dir=str(Path(__file__).parent))
    proc = subprocess.run(
        [sys.executable, "-c", script, mode, str(state_dir)],
        capture_output=True, text=True,
    )
    return proc.returncode


def test_kill_mid_round_leaves_prior_round_usable(tmp_path):
    store = fresh_store(tmp_path)
    run_cycle_round(store, CycleConfig(**FAST))
    round1 = load_manifest(store.state_dir, 1)
    seed_labels(store)

    rc = _run_crasher("mid_artifacts", store.state_dir)
    assert rc == -signal.SIGKILL

    # prior round untouched, half-built round invisible
    assert completed_rounds(store.state_dir) == [1]
    assert load_manifest(store.state_dir, 1) == round1
    reopened = CorpusStore(store.state_dir)  # store still parses cleanly
    assert latest_round(reopened.state_dir) == 1

    # the next run sweeps the wreckage and completes round 2
    state = run_cycle_round(reopened, CycleConfig(**FAST))
    assert state.round == 2
    assert completed_rounds(store.state_dir) == [1, 2]
    assert not list((store.state_dir / "rounds").glob("_wip_*"))


def test_kill_before_rename_rerun_is_value_idempotent(tmp_path):
    store = fresh_store(tmp_path)
    run_cycle_round(store, CycleConfig(**FAST))
    seed_labels(store)

    rc = _run_crasher("before_rename", store.state_dir)
    assert rc == -signal.SIGKILL
    # records were appended but the round directory never appeared
    assert completed_rounds(store.state_dir) == [1]

    reopened = CorpusStore(store.state_dir)
    orphans = [r for r in reopened.labels if r.source == "propagated" and r.round == 2]
    assert orphans  # the torn write is visible in the journal

    state = run_cycle_round(reopened, CycleConfig(**FAST))
    assert state.round == 2

    # same values as an uninterrupted twin run, duplicates notwithstanding
    twin_corpus = write_corpus(tmp_path / "twin.jsonl")
    twin = CorpusStore.ingest(twin_corpus, tmp_path / "twin_state")
    run_cycle_round(twin, CycleConfig(**FAST))
    for pid, val in SEED_LABELS:
        twin.record_label(LabelRecord(post_id=pid, value=val, rater_id="r1",
                                      basis="post_only", source="manual", round=1))
    run_cycle_round(twin, CycleConfig(**FAST))
    assert (
        reopened.effective_labels("post_only", sources=("manual", "propagated"))
        == twin.effective_labels("post_only", sources=("manual", "propagated"))
    )


def test_lock_rejects_live_holder_and_steals_stale(tmp_path):
    store = fresh_store(tmp_path)
    holder = subprocess.Popen([sys.executable, "-c", "import time; time.sleep(60)"])
    try:
        (store.state_dir / "cycle.lock").write_text(str(holder.pid), encoding="utf-8")
        with pytest.raises(DataError, match="another cycle round"):
            run_cycle_round(store, CycleConfig(**FAST))
    finally:
        holder.kill()
        holder.wait()
    # holder is dead now: the same lock file is stale and gets stolen
    state = run_cycle_round(store, CycleConfig(**FAST))
    assert state.round == 1
    assert not (store.state_dir / "cycle.lock").exists()
