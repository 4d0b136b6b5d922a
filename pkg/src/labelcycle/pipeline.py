"""One round of the semi-supervised cycle: clean, embed, cluster, propagate,
cross-validate, and queue the next batch of posts for human labeling.

Artifacts for a round are staged in a work directory and the whole directory
is renamed into place only after every file (manifest included) is written,
so a crash mid-round never damages the previous round. Propagated label
records are appended to the store just before the rename; if the process
dies between those two steps the re-run recomputes the same records and the
duplicate appends are value-idempotent.
"""

import os
import re
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .agreement import (
    DEFAULT_RUBRIC,
    HashtagLexicon,
    compute_irr,
    demo_lexicon_path,
    load_lexicon,
    suggest_label,
)
from .bow import bow_dense, bow_vectorize
from .cleaning import CleaningConfig, clean
from .cluster import kmeans
from .embedding import EmbeddingModel, train_model
from .errors import DataError
from .ioutil import atomic_write_text, canonical_json, digest_obj, file_digest, read_jsonl
from .propagation import CVReport, PropagationPolicy, ambiguous_clusters, cross_validate, propagate
from .store import BASES, CorpusStore, Post
from .training import TrainingConfig
from .vocab import build_vocab

ROUNDS_DIR = "rounds"
WIP_PREFIX = "_wip_"
LOCK_FILE = "cycle.lock"
MANIFEST_FILE = "manifest.json"

# Fixed timestamp stamped on records and manifests in deterministic mode so
# re-running a round reproduces byte-identical artifacts.
EPOCH_ISO = "1970-01-01T00:00:00+00:00"

MODEL_KINDS = ("cbow", "skipgram", "pvdm", "bow")

# The subword default (1<<21 buckets) is sized for large corpora; at the
# cycle's default dim it would allocate gigabytes, so rounds use a smaller
# table unless told otherwise.
DEFAULT_CYCLE_BUCKETS = 1 << 15


@dataclass(frozen=True)
class CycleConfig:
    kind: str = "cbow"
    dim: int = 100
    window: int = 5
    epochs: Optional[int] = None
    min_count: int = 5
    bucket_count: int = DEFAULT_CYCLE_BUCKETS
    k: int = 6
    restarts: int = 10
    min_labeled: int = 5
    unanimity: float = 1.0
    folds: int = 10
    basis: str = "post_only"
    seed: int = 1
    deterministic: bool = True
    retrain: bool = True
    queue_size: int = 50
    queue_sample: int = 10
    lexicon_path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DataError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.basis not in BASES:
            raise DataError(f"invalid basis {self.basis!r}")
        if self.queue_size < 1 or self.queue_sample < 1:
            raise DataError("queue_size and queue_sample must be at least 1")

    def policy(self) -> PropagationPolicy:
        return PropagationPolicy(
            min_labeled=self.min_labeled, unanimity_threshold=self.unanimity
        )

    def training(self) -> TrainingConfig:
        return TrainingConfig(
            dim=self.dim,
            window=self.window,
            epochs=self.epochs,
            seed=self.seed,
            deterministic_mode=self.deterministic,
        )

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "window": self.window,
            "epochs": self.epochs,
            "min_count": self.min_count,
            "bucket_count": self.bucket_count,
            "k": self.k,
            "restarts": self.restarts,
            "min_labeled": self.min_labeled,
            "unanimity": self.unanimity,
            "folds": self.folds,
            "basis": self.basis,
            "seed": self.seed,
            "deterministic": self.deterministic,
            "retrain": self.retrain,
            "queue_size": self.queue_size,
            "queue_sample": self.queue_sample,
            "lexicon_path": self.lexicon_path,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CycleConfig":
        return cls(**obj)


@dataclass
class CycleState:
    round: int
    stage: str
    artifacts: dict[str, str]
    queue: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "stage": self.stage,
            "artifacts": dict(sorted(self.artifacts.items())),
            "queue_length": len(self.queue),
        }


# -- round bookkeeping --------------------------------------------------------------


def round_dir(state_dir: str | Path, round_id: int) -> Path:
    return Path(state_dir) / ROUNDS_DIR / f"round_{round_id:04d}"


def completed_rounds(state_dir: str | Path) -> list[int]:
    """Rounds whose manifest exists. Work directories from interrupted runs
    do not count and get swept by the next run_cycle_round."""
    base = Path(state_dir) / ROUNDS_DIR
    if not base.is_dir():
        return []
    out = []
    for entry in base.iterdir():
        m = re.fullmatch(r"round_(\d{4})", entry.name)
        if m and (entry / MANIFEST_FILE).exists():
            out.append(int(m.group(1)))
    return sorted(out)


def load_manifest(state_dir: str | Path, round_id: int) -> dict:
    path = round_dir(state_dir, round_id) / MANIFEST_FILE
    if not path.exists():
        raise DataError(f"round {round_id} has no manifest at {path}")
    import json

    return json.loads(path.read_text(encoding="utf-8"))


def load_round_artifact(state_dir: str | Path, round_id: int, name: str) -> dict:
    import json

    path = round_dir(state_dir, round_id) / name
    if not path.exists():
        raise DataError(f"round {round_id} artifact {name!r} not found")
    return json.loads(path.read_text(encoding="utf-8"))


def latest_round(state_dir: str | Path) -> Optional[int]:
    rounds = completed_rounds(state_dir)
    return rounds[-1] if rounds else None


class _CycleLock:
    """One cycle round at a time per state directory. The lock file holds
    the owner pid; a lock whose pid is gone is stale and gets stolen."""

    def __init__(self, state_dir: Path):
        self.path = state_dir / LOCK_FILE

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            owner = self.path.read_text(encoding="utf-8").strip()
            if owner.isdigit() and _pid_alive(int(owner)):
                raise DataError(
                    f"another cycle round is running (pid {owner}); "
                    f"remove {self.path} if that process is gone"
                ) from None
            self.path.unlink(missing_ok=True)
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


# -- vector building ---------------------------------------------------------------


def clean_corpus(posts: dict[str, Post], config: Optional[CleaningConfig] = None):
    """Clean every post, sorted by post_id so downstream artifacts do not
    depend on ingestion order."""
    ordered = sorted(posts)
    docs = [clean(posts[pid], config) for pid in ordered]
    return ordered, docs


def document_vectors(
    docs: list[list[str]],
    ids: list[str],
    config: CycleConfig,
    prior_model: Optional[EmbeddingModel] = None,
) -> tuple[np.ndarray, Optional[EmbeddingModel], int]:
    """Vectors for clustering plus the trained model (None for bow) and the
    count of documents no token could represent."""
    if config.kind == "bow":
        vocab = build_vocab(docs, min_count=config.min_count)
        if len(vocab) == 0:
            raise DataError("bow vocabulary is empty; lower min_count")
        rows = [bow_dense(bow_vectorize(d, vocab), len(vocab)) for d in docs]
        mat = np.asarray(rows, dtype=np.float64)
        return mat, None, int((mat.sum(axis=1) == 0).sum())

    from .subword import SubwordIndex

    if prior_model is not None:
        model = prior_model
    else:
        model = train_model(
            docs,
            config.kind,
            config.training(),
            min_count=config.min_count,
            subwords=SubwordIndex(bucket_count=config.bucket_count),
            doc_ids=list(ids),
        )
    if config.kind == "pvdm":
        if prior_model is not None and (model.doc_ids or []) != list(ids):
            raise DataError("prior pvdm model indexes different documents; retrain")
        return model.doc_vecs.astype(np.float64), model, 0
    empty = 0
    rows = []
    for d in docs:
        vec, was_empty = model.embed_document(d)
        empty += was_empty
        rows.append(vec)
    return np.asarray(rows, dtype=np.float64), model, empty


def load_lexicon_for(config: CycleConfig) -> HashtagLexicon:
    path = config.lexicon_path or demo_lexicon_path()
    return load_lexicon(path)


def suggest_for_post(post: Post, lexicon: HashtagLexicon):
    return suggest_label(post, lexicon, DEFAULT_RUBRIC)


# -- the round itself ----------------------------------------------------------------


def run_cycle_round(store: CorpusStore, config: CycleConfig) -> CycleState:
    """Execute one full round against the store's state directory."""
    if len(store) == 0:
        raise DataError("no corpus ingested; run ingest first")
    state_dir = store.state_dir
    with _CycleLock(state_dir):
        prior = latest_round(state_dir)
        round_id = (prior or 0) + 1
        rounds_base = state_dir / ROUNDS_DIR
        rounds_base.mkdir(exist_ok=True)
        for stale in rounds_base.glob(WIP_PREFIX + "*"):
            shutil.rmtree(stale)
        wip = rounds_base / f"{WIP_PREFIX}round_{round_id:04d}"
        wip.mkdir()

        artifacts: dict[str, str] = {}

        def put(name: str, text: str) -> None:
            atomic_write_text(wip / name, text)
            artifacts[name] = file_digest(wip / name)

        def put_json(name: str, obj) -> None:
            put(name, canonical_json(obj) + "\n")

        # Labels driving this round: manual plus anything propagated in
        # earlier rounds. The current round's propagations never feed their
        # own unanimity check. 'removed' verdicts stay visible here so those
        # posts are neither overwritten by propagation nor re-queued.
        labeled = store.effective_labels(
            config.basis,
            sources=("manual", "propagated"),
            through_round=prior or 0,
            mask_removed=False,
        )
        usable = {p: v for p, v in labeled.items() if v != "removed"}
        manual_only = store.effective_labels(config.basis, sources=("manual",))

        # stage: cleaned
        ids, cleaned = clean_corpus(store.posts)
        put(
            "cleaned.jsonl",
            "".join(canonical_json(d.to_json()) + "\n" for d in cleaned),
        )

        # stage: trained
        prior_model = None
        if not config.retrain and prior is not None and config.kind != "bow":
            model_path = round_dir(state_dir, prior) / "model.bin"
            if model_path.exists():
                prior_model = EmbeddingModel.load(model_path)
        vectors, model, empty_docs = document_vectors(
            [d.tokens for d in cleaned], ids, config, prior_model
        )
        if model is not None:
            model.save(wip / "model.bin")
            artifacts["model.bin"] = file_digest(wip / "model.bin")
        np.save(wip / "vectors.npy", vectors)
        artifacts["vectors.npy"] = file_digest(wip / "vectors.npy")
        put_json("vector_ids.json", ids)

        # stage: clustered
        cluster_model, assignment = kmeans(
            vectors, config.k, restarts=config.restarts, seed=config.seed, ids=ids
        )
        mapping = assignment.mapping()
        put_json(
            "assignment.json",
            {
                "schema": "assignment/1",
                "k": config.k,
                "seed": config.seed,
                "wgss": cluster_model.wgss,
                "sizes": assignment.sizes,
                "assignment": mapping,
            },
        )

        # stage: propagated
        policy = config.policy()
        created = EPOCH_ISO if config.deterministic else ""
        report, records = propagate(
            mapping, labeled, policy, round_id=round_id, basis=config.basis, created_at=created
        )
        put_json(
            "propagation.json",
            {
                "report": report.to_json(),
                "records": [r.to_json() for r in records],
            },
        )

        if len(usable) >= config.folds:
            cv = cross_validate(mapping, usable, policy, folds=config.folds, seed=config.seed)
        else:
            cv = CVReport(
                folds=config.folds,
                seed=config.seed,
                rows=[],
                mean_accuracy=None,
                coverage=0.0,
                applicable=False,
            )
        put_json("cv.json", cv.to_json())

        # stage: awaiting_labels (or done at propagated if nothing is left)
        after = dict(labeled)
        for rec in records:
            after[rec.post_id] = rec.value
        lexicon = load_lexicon_for(config)
        queue = build_queue(store, mapping, after, policy, config, lexicon)
        put_json("queue.json", queue)
        stage = "awaiting_labels" if queue else "propagated"

        manifest = {
            "schema": "round-manifest/1",
            "round": round_id,
            "stage": stage,
            "config": config.to_json(),
            "config_digest": digest_obj(config.to_json()),
            "corpus_digest": store.corpus_digest(),
            "artifacts": dict(sorted(artifacts.items())),
            "counts": {
                "n_posts": len(ids),
                "empty_documents": empty_docs,
                "labeled_before": len(usable),
                "removed": len(labeled) - len(usable),
                "manual_labels": len(manual_only),
                "newly_labeled": report.newly_labeled,
                "labeled_after": len(usable) + report.newly_labeled,
                "queue_length": len(queue),
            },
            "created_at": EPOCH_ISO if config.deterministic else _now(),
        }
        atomic_write_text(wip / MANIFEST_FILE, canonical_json(manifest) + "\n")

        store.record_labels(records)
        os.rename(wip, round_dir(state_dir, round_id))
        return CycleState(round=round_id, stage=stage, artifacts=artifacts, queue=queue)


def _now() -> str:
    from .store import now_iso

    return now_iso()


def build_queue(
    store: CorpusStore,
    mapping: dict[str, int],
    labeled: dict[str, str],
    policy: PropagationPolicy,
    config: CycleConfig,
    lexicon: HashtagLexicon,
) -> list[dict]:
    """Round-robin over the ambiguous clusters, biggest first, so one pass of
    human effort touches every undecided cluster before any is revisited."""
    ranked = ambiguous_clusters(mapping, labeled, policy, sample_size=config.queue_sample)
    items: list[dict] = []
    cursors = [iter(c["sample_unlabeled"]) for c in ranked]
    live = list(range(len(ranked)))
    while live and len(items) < config.queue_size:
        still = []
        for i in live:
            try:
                post_id = next(cursors[i])
            except StopIteration:
                continue
            still.append(i)
            cluster = ranked[i]
            post = store.post(post_id)
            suggestion = suggest_for_post(post, lexicon)
            items.append(
                {
                    "post_id": post_id,
                    "cluster_id": cluster["cluster_id"],
                    "cluster_size": cluster["size"],
                    "labeled_count": cluster["labeled_count"],
                    "histogram": cluster["histogram"],
                    "suggestion": suggestion.to_json() if suggestion else None,
                }
            )
            if len(items) >= config.queue_size:
                break
        live = still
    return items


# -- views over completed rounds ------------------------------------------------------


def queue_view(store: CorpusStore, config_basis: str = "post_only", limit: int = 50) -> list[dict]:
    """The latest round's queue with post text joined in, minus anything that
    has picked up an effective manual label since the round ran."""
    state_dir = store.state_dir
    current = latest_round(state_dir)
    if current is None:
        return []
    queue = load_round_artifact(state_dir, current, "queue.json")
    manual = store.effective_labels(config_basis, sources=("manual",), mask_removed=False)
    cleaned = {
        row["post_id"]: row["tokens"]
        for _, row in read_jsonl(round_dir(state_dir, current) / "cleaned.jsonl")
    }
    out = []
    for item in queue:
        if item["post_id"] in manual:
            continue
        post = store.post(item["post_id"])
        enriched = dict(item)
        enriched["round"] = current
        enriched["raw_text"] = post.raw_text
        enriched["cleaned_tokens"] = cleaned.get(item["post_id"], [])
        enriched["cohort"] = post.cohort
        enriched["source_hashtags"] = list(post.source_hashtags)
        out.append(enriched)
        if len(out) >= limit:
            break
    return out


def irr_view(
    store: CorpusStore,
    basis: str = "post_only",
    rater_a: Optional[str] = None,
    rater_b: Optional[str] = None,
) -> dict:
    """Agreement between two raters' manual labels, stratified by cohort."""
    raters = store.raters()
    if rater_a is None or rater_b is None:
        if len(raters) < 2:
            raise DataError("agreement needs two raters with manual labels")
        rater_a, rater_b = (rater_a or raters[0]), (rater_b or raters[1])
        if rater_a == rater_b:
            rater_b = next(r for r in raters if r != rater_a)
    # 'removed' verdicts stay visible: agreement scoring treats removal as a
    # judgment in its own right (it excludes the pair, but only explicitly).
    labels_a = store.effective_labels(
        basis, sources=("manual",), raters=[rater_a], mask_removed=False
    )
    labels_b = store.effective_labels(
        basis, sources=("manual",), raters=[rater_b], mask_removed=False
    )
    both = set(labels_a) & set(labels_b)
    strata = {"all": sorted(both)}
    for cohort in ("control", "topic_flagged"):
        members = [p for p in sorted(both) if store.post(p).cohort == cohort]
        if members:
            strata[cohort] = members
    report = compute_irr(labels_a, labels_b, strata)
    out = report.to_json()
    out["rater_a"] = rater_a
    out["rater_b"] = rater_b
    out["basis"] = basis
    return out


def cycle_report(store: CorpusStore) -> dict:
    """Per-round summary table: model, k, CV accuracy, newly labeled,
    cumulative labeled fraction. All values are re-read from the stored
    artifacts, so the report never disagrees with what is on disk."""
    state_dir = store.state_dir
    rounds = completed_rounds(state_dir)
    if not rounds:
        raise DataError("no completed rounds to report on")
    n_posts = len(store)
    rows = []
    for r in rounds:
        manifest = load_manifest(state_dir, r)
        cv = load_round_artifact(state_dir, r, "cv.json")
        prop = load_round_artifact(state_dir, r, "propagation.json")["report"]
        basis = manifest["config"]["basis"]
        labeled_through = store.effective_labels(
            basis, sources=("manual", "propagated"), through_round=r
        )
        rows.append(
            {
                "round": r,
                "model": manifest["config"]["kind"],
                "k": manifest["config"]["k"],
                "cv_accuracy": cv["mean_accuracy"],
                "cv_applicable": cv["applicable"],
                "newly_labeled": prop["newly_labeled"],
                "labeled_fraction": round(len(labeled_through) / n_posts, 6),
                "queue_length": manifest["counts"]["queue_length"],
            }
        )
    return {
        "schema": "cycle-report/1",
        "n_posts": n_posts,
        "rounds": rows,
    }


def render_report_text(report: dict) -> str:
    """The human-readable twin of cycle_report's JSON; every cell comes
    straight from the dict so the two cannot drift."""
    header = ["round", "model", "k", "cv_accuracy", "newly_labeled", "labeled_fraction"]
    lines = ["  ".join(h.rjust(15) for h in header)]
    for row in report["rounds"]:
        acc = "N/A" if row["cv_accuracy"] is None else f"{row['cv_accuracy']:.4f}"
        cells = [
            str(row["round"]),
            row["model"],
            str(row["k"]),
            acc,
            str(row["newly_labeled"]),
            f"{row['labeled_fraction']:.4f}",
        ]
        lines.append("  ".join(c.rjust(15) for c in cells))
    lines.append(f"posts in corpus: {report['n_posts']}")
    return "\n".join(lines) + "\n"
