"""Persistent data model: posts, an append-only label log, and run manifests.

Persistence is newline-delimited JSON under a state directory:

    corpus.jsonl   one post per line (canonical form, written once at ingest)
    labels.jsonl   one label record per line, append-only

The label log is the single source of truth; the "effective label" view is
always recomputed from it. Raw post text is stored verbatim and never
mutated — cleaning produces derived artifacts keyed by run.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from .errors import DataError
from .ioutil import canonical_json, file_digest, read_jsonl

COHORTS = frozenset({"control", "topic_flagged"})
LABEL_VALUES = frozenset({"yes", "unclear", "no", "removed"})
BASES = frozenset({"post_only", "post_plus_profile"})
SOURCES = frozenset({"manual", "propagated", "suggested"})

# Precedence when several sources label the same (post, basis).
_SOURCE_RANK = {"manual": 2, "propagated": 1, "suggested": 0}

CORPUS_FILE = "corpus.jsonl"
LABELS_FILE = "labels.jsonl"


@dataclass(frozen=True)
class Post:
    post_id: str
    raw_text: str
    cohort: str
    source_hashtags: tuple[str, ...] = ()
    created_at: Optional[str] = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["source_hashtags"] = list(self.source_hashtags)
        return d

    @classmethod
    def from_json(cls, obj: dict, where: str = "") -> "Post":
        try:
            post_id = str(obj["post_id"])
            raw_text = str(obj["raw_text"])
            cohort = obj.get("cohort", "control")
        except (KeyError, TypeError) as exc:
            raise DataError(f"{where}: post record missing field ({exc})") from exc
        if cohort not in COHORTS:
            raise DataError(f"{where}: unknown cohort {cohort!r} for post {post_id!r}")
        tags = tuple(str(t).lower().lstrip("#") for t in obj.get("source_hashtags") or ())
        return cls(post_id, raw_text, cohort, tags, obj.get("created_at"))


@dataclass(frozen=True)
class LabelRecord:
    post_id: str
    rater_id: str
    value: str
    basis: str = "post_only"
    source: str = "manual"
    round: int = 0
    created_at: str = ""

    def validate(self) -> None:
        if self.value not in LABEL_VALUES:
            raise DataError(f"invalid label value {self.value!r}")
        if self.basis not in BASES:
            raise DataError(f"invalid basis {self.basis!r}")
        if self.source not in SOURCES:
            raise DataError(f"invalid source {self.source!r}")
        if self.round < 0:
            raise DataError("round must be a non-negative integer")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict, where: str = "") -> "LabelRecord":
        try:
            rec = cls(
                post_id=str(obj["post_id"]),
                rater_id=str(obj["rater_id"]),
                value=str(obj["value"]),
                basis=str(obj.get("basis", "post_only")),
                source=str(obj.get("source", "manual")),
                round=int(obj.get("round", 0)),
                created_at=str(obj.get("created_at", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{where}: label record invalid ({exc})") from exc
        rec.validate()
        return rec


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def effective_label_map(
    records: Iterable[LabelRecord],
    basis: str,
    sources: Iterable[str] = ("manual", "propagated", "suggested"),
    raters: Optional[Iterable[str]] = None,
    through_round: Optional[int] = None,
    mask_removed: bool = True,
) -> dict[str, str]:
    """Map post_id -> effective value for one basis.

    Precedence is manual > propagated > suggested; within a source the
    latest (round, append order) record wins. A winning value of 'removed'
    masks the post entirely: it behaves as if never labeled and
    lower-precedence sources do not show through. Pass mask_removed=False
    to see the 'removed' verdicts themselves, e.g. to keep such posts out
    of a labeling queue.
    """
    if basis not in BASES:
        raise DataError(f"invalid basis {basis!r}")
    allowed = frozenset(sources)
    rater_set = frozenset(raters) if raters is not None else None
    best: dict[str, tuple[int, int, int, str]] = {}
    for seq, rec in enumerate(records):
        if rec.basis != basis or rec.source not in allowed:
            continue
        if rater_set is not None and rec.rater_id not in rater_set:
            continue
        if through_round is not None and rec.round > through_round:
            continue
        key = (_SOURCE_RANK[rec.source], rec.round, seq, rec.value)
        if rec.post_id not in best or key[:3] > best[rec.post_id][:3]:
            best[rec.post_id] = key
    out = {pid: v for pid, (_, _, _, v) in best.items()}
    if mask_removed:
        out = {pid: v for pid, v in out.items() if v != "removed"}
    return out


def load_label_file(path: str | Path) -> list[LabelRecord]:
    """Parse a labels JSONL file; any bad line aborts the load."""
    path = Path(path)
    records = []
    try:
        for lineno, obj in read_jsonl(path):
            records.append(LabelRecord.from_json(obj, where=f"{path.name}:{lineno}"))
    except ValueError as exc:
        raise DataError(f"{path.name}: {exc}") from exc
    return records


def load_corpus_file(
    path: str | Path,
    cohort_mapping: Optional[dict[str, str]] = None,
) -> dict[str, Post]:
    """Parse a corpus JSONL file. All-or-nothing: any bad line aborts the load.

    cohort_mapping optionally maps a source hashtag to a cohort; it applies
    only to records that carry no explicit cohort of their own.
    """
    path = Path(path)
    posts: dict[str, Post] = {}
    try:
        rows = list(read_jsonl(path))
    except ValueError as exc:
        raise DataError(f"{path.name}: {exc}") from exc
    if not rows:
        raise DataError(f"{path.name}: empty corpus file")
    for lineno, obj in rows:
        if cohort_mapping and "cohort" not in obj:
            for tag in obj.get("source_hashtags") or ():
                mapped = cohort_mapping.get(str(tag).lower().lstrip("#"))
                if mapped is not None:
                    obj = {**obj, "cohort": mapped}
                    break
        post = Post.from_json(obj, where=f"{path.name}:{lineno}")
        if post.post_id in posts:
            raise DataError(f"{path.name}:{lineno}: duplicate post_id {post.post_id!r}")
        posts[post.post_id] = post
    return posts


class CorpusStore:
    """State-directory backed store with a single serialized label-writer path.

    Readers take consistent snapshots (a reader never observes a half-written
    record); all label writes append one full line under a lock.
    """

    def __init__(self, state_dir: str | Path):
        self.state_dir = Path(state_dir)
        self._lock = threading.Lock()
        self._posts: dict[str, Post] = {}
        self._labels: list[LabelRecord] = []
        self._load()

    # -- loading / ingest ---------------------------------------------------

    def _load(self) -> None:
        corpus = self.state_dir / CORPUS_FILE
        if corpus.exists():
            self._posts = load_corpus_file(corpus)
        labels = self.state_dir / LABELS_FILE
        if labels.exists():
            try:
                for lineno, obj in read_jsonl(labels):
                    self._labels.append(LabelRecord.from_json(obj, where=f"{LABELS_FILE}:{lineno}"))
            except ValueError as exc:
                raise DataError(f"{LABELS_FILE}: {exc}") from exc

    @classmethod
    def ingest(
        cls,
        corpus_path: str | Path,
        state_dir: str | Path,
        cohort_mapping: Optional[dict[str, str]] = None,
    ) -> "CorpusStore":
        """Load a corpus file and persist its canonical form into state_dir.

        Rejects the whole file on any malformed line or duplicate post_id;
        nothing is written unless every record parses.
        """
        posts = load_corpus_file(corpus_path, cohort_mapping)
        state_dir = Path(state_dir)
        state_dir.mkdir(parents=True, exist_ok=True)
        target = state_dir / CORPUS_FILE
        if target.exists():
            raise DataError(f"{target}: corpus already ingested")
        lines = "".join(canonical_json(p.to_json()) + "\n" for p in posts.values())
        target.write_text(lines, encoding="utf-8")
        return cls(state_dir)

    # -- posts ---------------------------------------------------------------

    @property
    def posts(self) -> dict[str, Post]:
        return dict(self._posts)

    def post(self, post_id: str) -> Post:
        try:
            return self._posts[post_id]
        except KeyError:
            raise DataError(f"unknown post_id {post_id!r}") from None

    def __len__(self) -> int:
        return len(self._posts)

    def corpus_digest(self) -> str:
        return file_digest(self.state_dir / CORPUS_FILE)

    # -- labels ----------------------------------------------------------------

    def record_label(self, record: LabelRecord) -> LabelRecord:
        """Append one label record. Propagated/suggested labels never displace
        a manual label for the same (post, basis); such writes are rejected."""
        record.validate()
        if record.post_id not in self._posts:
            raise DataError(f"unknown post_id {record.post_id!r}")
        if not record.created_at:
            record = LabelRecord(**{**record.to_json(), "created_at": now_iso()})
        with self._lock:
            if record.source != "manual":
                if self._has_manual(record.post_id, record.basis):
                    raise DataError(
                        f"{record.source} label rejected: post {record.post_id!r} "
                        f"already has a manual label for basis {record.basis!r}"
                    )
            self._labels.append(record)
            with open(self.state_dir / LABELS_FILE, "a", encoding="utf-8") as fh:
                fh.write(canonical_json(record.to_json()) + "\n")
        return record

    def record_labels(self, records: Iterable[LabelRecord]) -> list[LabelRecord]:
        return [self.record_label(r) for r in records]

    def _has_manual(self, post_id: str, basis: str) -> bool:
        return any(
            r.source == "manual" and r.post_id == post_id and r.basis == basis
            for r in self._labels
        )

    @property
    def labels(self) -> list[LabelRecord]:
        with self._lock:
            return list(self._labels)

    def effective_labels(
        self,
        basis: str,
        sources: Iterable[str] = ("manual", "propagated", "suggested"),
        raters: Optional[Iterable[str]] = None,
        through_round: Optional[int] = None,
        mask_removed: bool = True,
    ) -> dict[str, str]:
        return effective_label_map(
            self.labels, basis, sources, raters, through_round, mask_removed
        )

    def raters(self) -> list[str]:
        return sorted({r.rater_id for r in self.labels if r.source == "manual"})
