"""Embedding models: training entry point, document embedding, neighbors,
and a versioned binary serialization format.

A token's vector is the mean of its unit rows (its own vocabulary row plus
its hashed subword buckets), so any string gets a finite vector as long as
subwords are enabled. Document vectors for cbow/skipgram are token-vector
means; the paragraph-vector kind trains and stores per-document vectors
instead.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .subword import SubwordIndex
from .training import (
    KINDS,
    TrainingConfig,
    build_noise_cdf,
    flatten_docs,
    init_matrices,
    run_training,
    unit_table,
)
from .vocab import Vocabulary, build_vocab

_MAGIC = b"LCEM"
_FORMAT_VERSION = 1


@dataclass
class EmbeddingModel:
    kind: str
    config: TrainingConfig
    vocab: Vocabulary
    subwords: SubwordIndex
    input_vecs: np.ndarray
    output_vecs: np.ndarray
    doc_vecs: Optional[np.ndarray] = None
    doc_ids: Optional[list[str]] = None
    losses: Optional[list[float]] = None

    def __post_init__(self):
        self._unit_lists: Optional[list[np.ndarray]] = None
        self._word_matrix: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.input_vecs.shape[1]

    def _units(self) -> list[np.ndarray]:
        if self._unit_lists is None:
            self._unit_lists = unit_table(self.vocab, self.subwords)
        return self._unit_lists

    def word_vector(self, token: str) -> Optional[np.ndarray]:
        """Mean of the token's unit rows; None when nothing represents it."""
        units = self.subwords.unit_ids(token, self.vocab)
        if not units:
            return None
        return self.input_vecs[np.asarray(units)].mean(axis=0)

    def word_matrix(self) -> np.ndarray:
        """Composed vectors for every vocabulary token, cached."""
        if self._word_matrix is None:
            rows = [self.input_vecs[u].mean(axis=0) for u in self._units()]
            self._word_matrix = np.vstack(rows) if rows else np.zeros((0, self.dim), np.float32)
        return self._word_matrix

    def embed_document(self, tokens: Sequence[str]) -> tuple[np.ndarray, bool]:
        """Mean of token vectors. Returns (vector, empty_flag); the flag is
        set when no token was representable."""
        if self.kind == "pvdm":
            raise DataError("embed_document applies to cbow/skipgram; use doc vectors for pvdm")
        vecs = [v for v in (self.word_vector(t) for t in tokens) if v is not None]
        if not vecs:
            return np.zeros(self.dim, dtype=np.float32), True
        return np.mean(vecs, axis=0).astype(np.float32), False

    def infer_doc_vector(
        self, tokens: Sequence[str], infer_epochs: int = 20, seed: Optional[int] = None
    ) -> np.ndarray:
        """Train a fresh doc vector against frozen word/output matrices."""
        if self.kind != "pvdm":
            raise DataError("infer_doc_vector requires a pvdm model")
        if not tokens:
            raise DataError("cannot infer a doc vector for an empty token list")
        seed = self.config.seed if seed is None else seed
        tokens_flat, doc_offsets = flatten_docs([list(tokens)], self.vocab)
        rng = np.random.default_rng(seed)
        bound = 0.5 / self.dim
        doc_vec = rng.uniform(-bound, bound, size=(1, self.dim)).astype(np.float32)
        if len(tokens_flat) == 0:
            return doc_vec[0]  # nothing in vocabulary to fit against
        run_training(
            "pvdm", tokens_flat, doc_offsets, self._units(),
            self.input_vecs, self.output_vecs, doc_vec,
            self.config, build_noise_cdf(self.vocab),
            train_inputs=False, epochs=infer_epochs,
        )
        return doc_vec[0]

    def nearest_neighbors(self, token: str, n: int) -> list[tuple[str, float]]:
        """Top-n vocabulary tokens by cosine similarity, query excluded."""
        vocab_size = len(self.vocab)
        if n > vocab_size - 1:
            raise DataError(f"n={n} exceeds the {vocab_size - 1} candidate tokens")
        query = self.word_vector(token)
        if query is None:
            raise DataError(f"token {token!r} is not representable by this model")
        matrix = self.word_matrix()
        norms = np.linalg.norm(matrix, axis=1) * (np.linalg.norm(query) or 1.0)
        sims = (matrix @ query) / np.where(norms == 0, 1.0, norms)
        order = np.argsort(-sims)
        out = []
        for i in order:
            candidate = self.vocab.tokens[i]
            if candidate == token:
                continue
            out.append((candidate, float(sims[i])))
            if len(out) == n:
                break
        return out

    # -- serialization ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        header = {
            "kind": self.kind,
            "config": self.config.to_json(),
            "vocab": self.vocab.to_json(),
            "subwords": self.subwords.to_json(),
            "shapes": {
                "input": list(self.input_vecs.shape),
                "output": list(self.output_vecs.shape),
                "docs": list(self.doc_vecs.shape) if self.doc_vecs is not None else None,
            },
            "doc_ids": self.doc_ids,
            "losses": self.losses,
        }
        blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IQ", _FORMAT_VERSION, len(blob)))
            fh.write(blob)
            fh.write(_as_le32(self.input_vecs).tobytes())
            fh.write(_as_le32(self.output_vecs).tobytes())
            if self.doc_vecs is not None:
                fh.write(_as_le32(self.doc_vecs).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingModel":
        path = Path(path)
        with open(path, "rb") as fh:
            if fh.read(4) != _MAGIC:
                raise DataError(f"{path}: not a model file")
            version, header_len = struct.unpack("<IQ", fh.read(12))
            if version != _FORMAT_VERSION:
                raise DataError(f"{path}: unsupported model format version {version}")
            header = json.loads(fh.read(header_len).decode("utf-8"))
            shapes = header["shapes"]
            input_vecs = _read_matrix(fh, shapes["input"], path)
            output_vecs = _read_matrix(fh, shapes["output"], path)
            doc_vecs = _read_matrix(fh, shapes["docs"], path) if shapes["docs"] else None
        return cls(
            kind=header["kind"],
            config=TrainingConfig.from_json(header["config"]),
            vocab=Vocabulary.from_json(header["vocab"]),
            subwords=SubwordIndex.from_json(header["subwords"]),
            input_vecs=input_vecs,
            output_vecs=output_vecs,
            doc_vecs=doc_vecs,
            doc_ids=header.get("doc_ids"),
            losses=header.get("losses"),
        )


def _as_le32(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr, dtype="<f4")


def _read_matrix(fh, shape, path) -> np.ndarray:
    n = int(np.prod(shape))
    raw = fh.read(4 * n)
    if len(raw) != 4 * n:
        raise DataError(f"{path}: truncated model file")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32, copy=True)


def train_model(
    docs: Sequence[list[str]],
    kind: str,
    config: Optional[TrainingConfig] = None,
    min_count: int = 5,
    subwords: Optional[SubwordIndex] = None,
    vocab: Optional[Vocabulary] = None,
    doc_ids: Optional[list[str]] = None,
) -> EmbeddingModel:
    """Build vocabulary (unless given), initialize, and train a model."""
    if kind not in KINDS:
        raise DataError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    config = config or TrainingConfig()
    vocab = vocab or build_vocab(docs, min_count=min_count)
    subwords = subwords or SubwordIndex()
    if doc_ids is not None and len(doc_ids) != len(docs):
        raise DataError("doc_ids length does not match docs")

    tokens_flat, doc_offsets = flatten_docs(docs, vocab)
    unit_lists = unit_table(vocab, subwords)
    n_docs = len(docs) if kind == "pvdm" else 0
    input_vecs, output_vecs, doc_vecs = init_matrices(
        len(vocab), subwords.bucket_count, config.dim, config.seed, n_docs
    )
    losses = run_training(
        kind, tokens_flat, doc_offsets, unit_lists,
        input_vecs, output_vecs, doc_vecs, config, build_noise_cdf(vocab),
    )
    return EmbeddingModel(
        kind=kind,
        config=config,
        vocab=vocab,
        subwords=subwords,
        input_vecs=input_vecs,
        output_vecs=output_vecs,
        doc_vecs=doc_vecs,
        doc_ids=doc_ids,
        losses=losses,
    )
