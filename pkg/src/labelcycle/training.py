"""SGD training loop for the embedding models.

Negative sampling stands in for the full softmax as the tractable
surrogate objective; the oracle tests pin their agreement at toy scale.
The epoch loop runs either in the compiled extension or in the numpy
reference kernels; set LABELCYCLE_BACKEND to pure|compiled|auto to force
one. Each backend is bit-reproducible under a fixed seed, but the two are
not bit-identical to each other (different RNG streams).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import _pure_kernels
from .errors import DataError, TrainingDivergedError
from .subword import SubwordIndex
from .vocab import Vocabulary

KINDS = ("cbow", "skipgram", "pvdm")
_KIND_CODES = {"cbow": 0, "skipgram": 1, "pvdm": 2}

DEFAULT_EPOCHS = {"cbow": 5, "skipgram": 5, "pvdm": 20}
NOISE_POWER = 0.75


@dataclass(frozen=True)
class TrainingConfig:
    dim: int = 100
    window: int = 5
    epochs: Optional[int] = None  # None -> per-kind default (5; 20 for pvdm)
    lr_start: float = 0.05
    lr_end: float = 0.0001
    negative_samples: int = 5
    seed: int = 1
    deterministic_mode: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.dim <= 0 or self.window <= 0:
            raise DataError("dim and window must be positive")
        if self.epochs is not None and self.epochs <= 0:
            raise DataError("epochs must be positive")
        if self.negative_samples < 1:
            raise DataError("negative_samples must be >= 1")
        if not (0 < self.lr_end <= self.lr_start):
            raise DataError("need 0 < lr_end <= lr_start")

    def epochs_for(self, kind: str) -> int:
        return self.epochs if self.epochs is not None else DEFAULT_EPOCHS[kind]

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "window": self.window,
            "epochs": self.epochs,
            "lr_start": self.lr_start,
            "lr_end": self.lr_end,
            "negative_samples": self.negative_samples,
            "seed": self.seed,
            "deterministic_mode": self.deterministic_mode,
            "workers": self.workers,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainingConfig":
        return cls(**obj)


def active_backend() -> str:
    choice = os.environ.get("LABELCYCLE_BACKEND", "auto")
    if choice not in ("auto", "pure", "compiled"):
        raise DataError(f"LABELCYCLE_BACKEND must be auto|pure|compiled, got {choice!r}")
    if choice == "pure":
        return "pure"
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        if choice == "compiled":
            raise DataError("compiled backend requested but extension not built") from None
        return "pure"
    return "compiled"


def build_noise_cdf(vocab: Vocabulary) -> np.ndarray:
    weights = np.asarray(vocab.counts, dtype=np.float64) ** NOISE_POWER
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return cdf


def flatten_docs(
    docs: Iterable[list[str]], vocab: Vocabulary
) -> tuple[np.ndarray, np.ndarray]:
    """Map documents to vocabulary ids (OOV tokens dropped), flattened with
    per-document offsets. Document order and count are preserved so doc
    vectors stay aligned."""
    flat: list[int] = []
    offsets = [0]
    for tokens in docs:
        flat.extend(i for i in (vocab.index(t) for t in tokens) if i is not None)
        offsets.append(len(flat))
    return np.asarray(flat, dtype=np.int32), np.asarray(offsets, dtype=np.int64)


def unit_table(vocab: Vocabulary, subwords: SubwordIndex) -> list[np.ndarray]:
    return [
        np.asarray(subwords.unit_ids(tok, vocab), dtype=np.int64) for tok in vocab
    ]


def init_matrices(
    vocab_size: int, bucket_count: int, dim: int, seed: int, n_docs: int = 0
) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    rng = np.random.default_rng(seed)
    bound = np.float32(0.5 / dim)

    def uniform32(rows: int) -> np.ndarray:
        # draw float32 directly; the input matrix can be 2^21 rows
        raw = rng.random(size=(rows, dim), dtype=np.float32)
        return (raw * 2 - 1) * bound

    input_vecs = uniform32(vocab_size + bucket_count)
    output_vecs = np.zeros((vocab_size, dim), dtype=np.float32)
    doc_vecs = uniform32(n_docs) if n_docs else None
    return input_vecs, output_vecs, doc_vecs


def count_positions(doc_offsets: np.ndarray) -> int:
    return int(doc_offsets[-1])


def run_training(
    kind: str,
    tokens_flat: np.ndarray,
    doc_offsets: np.ndarray,
    unit_lists: list[np.ndarray],
    input_vecs: np.ndarray,
    output_vecs: np.ndarray,
    doc_vecs: Optional[np.ndarray],
    config: TrainingConfig,
    noise_cdf: np.ndarray,
    train_inputs: bool = True,
    epochs: Optional[int] = None,
) -> list[float]:
    """Run the epoch loop in place; returns mean loss per epoch."""
    if kind not in KINDS:
        raise DataError(f"unknown model kind {kind!r}")
    epochs = epochs if epochs is not None else config.epochs_for(kind)
    total_positions = count_positions(doc_offsets) * epochs
    if total_positions == 0:
        raise DataError("corpus has no in-vocabulary tokens to train on")

    backend = active_backend()
    kind_code = _KIND_CODES[kind]
    losses: list[float] = []
    done = 0

    if backend == "compiled":
        from . import _ckernels

        units_flat = np.concatenate(unit_lists) if unit_lists else np.empty(0, dtype=np.int64)
        unit_offsets = np.zeros(len(unit_lists) + 1, dtype=np.int64)
        np.cumsum([len(u) for u in unit_lists], out=unit_offsets[1:])
        state = np.uint64(np.random.SeedSequence(config.seed).generate_state(1, np.uint64)[0] | 1)
        for _ in range(epochs):
            loss_sum, n_examples, done, state = _ckernels.run_epoch(
                kind_code, tokens_flat, doc_offsets, units_flat, unit_offsets,
                input_vecs, output_vecs, doc_vecs, config.window,
                config.negative_samples, noise_cdf, config.lr_start, config.lr_end,
                done, total_positions, state, train_inputs,
            )
            losses.append(_checked_mean(loss_sum, n_examples, len(losses)))
    else:
        rng = np.random.default_rng(config.seed)
        for _ in range(epochs):
            loss_sum, n_examples, done = _pure_kernels.run_epoch(
                kind_code, tokens_flat, doc_offsets, unit_lists,
                input_vecs, output_vecs, doc_vecs, config.window,
                config.negative_samples, noise_cdf, config.lr_start, config.lr_end,
                done, total_positions, rng, train_inputs,
            )
            losses.append(_checked_mean(loss_sum, n_examples, len(losses)))

    if not np.isfinite(input_vecs).all() or not np.isfinite(output_vecs).all():
        raise TrainingDivergedError("non-finite parameters after training")
    return losses


def _checked_mean(loss_sum: float, n_examples: int, epoch: int) -> float:
    mean = loss_sum / max(n_examples, 1)
    if not np.isfinite(mean):
        raise TrainingDivergedError("non-finite training loss", epoch=epoch, loss=mean)
    return mean
