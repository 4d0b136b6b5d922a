"""Bag-of-words document vectors: sparse token counts over a vocabulary."""

from __future__ import annotations

from collections import Counter

from .vocab import Vocabulary

# A BowVector is a sparse {vocab_index: count} map with positive counts.
BowVector = dict[int, int]


def bow_vectorize(tokens: list[str], vocab: Vocabulary) -> BowVector:
    """Count in-vocabulary tokens; out-of-vocabulary tokens are ignored."""
    counts: Counter[int] = Counter()
    for tok in tokens:
        idx = vocab.index(tok)
        if idx is not None:
            counts[idx] += 1
    return dict(counts)


def bow_dense(vector: BowVector, vocab_size: int) -> list[int]:
    dense = [0] * vocab_size
    for idx, count in vector.items():
        dense[idx] = count
    return dense
