"""Character n-gram hashing for out-of-vocabulary coverage.

Tokens are wrapped in boundary markers ('<' and '>') and every n-gram with
n_min <= n <= n_max is hashed into one of bucket_count buckets with 32-bit
FNV-1a. Any non-empty token therefore maps to at least one unit, which is
what lets a misspelling like "runnin" land near "running".

bucket_count=0 disables subwords entirely (plain word-vector mode); only
in-vocabulary tokens are representable then.
"""

from __future__ import annotations

from dataclasses import dataclass

from .vocab import Vocabulary

DEFAULT_N_MIN = 3
DEFAULT_N_MAX = 6
DEFAULT_BUCKETS = 1 << 21

_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619
_U32 = 0xFFFFFFFF


def fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U32
    return h


@dataclass(frozen=True)
class SubwordIndex:
    n_min: int = DEFAULT_N_MIN
    n_max: int = DEFAULT_N_MAX
    bucket_count: int = DEFAULT_BUCKETS

    def __post_init__(self):
        if not (1 <= self.n_min <= self.n_max):
            raise ValueError("need 1 <= n_min <= n_max")
        if self.bucket_count < 0:
            raise ValueError("bucket_count must be >= 0")

    def ngrams(self, token: str) -> list[str]:
        marked = f"<{token}>"
        out = []
        for n in range(self.n_min, self.n_max + 1):
            for i in range(len(marked) - n + 1):
                out.append(marked[i : i + n])
        return out

    def bucket_ids(self, token: str) -> list[int]:
        if self.bucket_count == 0 or not token:
            return []
        return [
            fnv1a(gram.encode("utf-8")) % self.bucket_count
            for gram in self.ngrams(token)
        ]

    def unit_ids(self, token: str, vocab: Vocabulary) -> list[int]:
        """Input-matrix row ids for a token: its vocab id when present, then
        its subword buckets offset by the vocabulary size."""
        units = []
        idx = vocab.index(token)
        if idx is not None:
            units.append(idx)
        offset = len(vocab)
        units.extend(offset + b for b in self.bucket_ids(token))
        return units

    def to_json(self) -> dict:
        return {
            "n_min": self.n_min,
            "n_max": self.n_max,
            "bucket_count": self.bucket_count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SubwordIndex":
        return cls(int(obj["n_min"]), int(obj["n_max"]), int(obj["bucket_count"]))
