"""Token vocabulary with a frequency floor.

Tokens seen fewer than min_count times are excluded from the vocabulary
(but stay reachable through subword buckets). Indices are dense 0..V-1,
assigned by descending count then lexicographic order so a vocabulary is
a pure function of the corpus token multiset.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .errors import DataError

DEFAULT_MIN_COUNT = 5


@dataclass
class Vocabulary:
    tokens: list[str]
    counts: list[int]
    total_tokens: int
    min_count: int

    def __post_init__(self):
        self._index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def index(self, token: str) -> Optional[int]:
        return self._index.get(token)

    def count(self, token: str) -> int:
        i = self._index.get(token)
        return 0 if i is None else self.counts[i]

    def to_json(self) -> dict:
        return {
            "tokens": self.tokens,
            "counts": self.counts,
            "total_tokens": self.total_tokens,
            "min_count": self.min_count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        return cls(
            tokens=list(obj["tokens"]),
            counts=[int(c) for c in obj["counts"]],
            total_tokens=int(obj["total_tokens"]),
            min_count=int(obj["min_count"]),
        )


def build_vocab(
    docs: Iterable[list[str]], min_count: int = DEFAULT_MIN_COUNT
) -> Vocabulary:
    """Count tokens across documents and keep those with count >= min_count."""
    if min_count < 1:
        raise DataError("min_count must be >= 1")
    counter: Counter[str] = Counter()
    total = 0
    for tokens in docs:
        counter.update(tokens)
        total += len(tokens)
    if total == 0:
        raise DataError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (tok for tok, c in counter.items() if c >= min_count),
        key=lambda tok: (-counter[tok], tok),
    )
    return Vocabulary(
        tokens=kept,
        counts=[counter[tok] for tok in kept],
        total_tokens=total,
        min_count=min_count,
    )
