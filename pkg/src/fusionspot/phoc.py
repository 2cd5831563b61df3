"""Pyramidal histogram of characters (unigram PHOC)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import Embedding, nfc

DEFAULT_LEVELS = (1, 2, 3, 4, 5)


class PhocError(ValueError):
    pass


@dataclass(frozen=True)
class PhocConfig:
    alphabet: str
    levels: tuple[int, ...] = DEFAULT_LEVELS

    def __post_init__(self):
        object.__setattr__(self, "alphabet", nfc(self.alphabet))
        object.__setattr__(self, "levels", tuple(int(x) for x in self.levels))
        if not self.alphabet:
            raise PhocError("alphabet must be non-empty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise PhocError("alphabet contains duplicate code points")
        if not self.levels:
            raise PhocError("levels must be non-empty")
        if any(lv < 1 for lv in self.levels):
            raise PhocError("levels must be positive")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise PhocError("levels must be strictly increasing")

    @property
    def index(self) -> dict[str, int]:
        return _alphabet_index(self.alphabet)

    @classmethod
    def from_corpus(cls, words: Iterable[str], levels=DEFAULT_LEVELS) -> "PhocConfig":
        """Alphabet = every code point seen in ``words``, sorted."""
        chars = set()
        for w in words:
            chars.update(nfc(w))
        return cls("".join(sorted(chars)), tuple(levels))

    def to_json(self) -> dict:
        return {"alphabet": self.alphabet, "levels": list(self.levels)}

    @classmethod
    def from_json(cls, data: dict) -> "PhocConfig":
        return cls(data["alphabet"], tuple(data["levels"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PhocConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@lru_cache(maxsize=64)
def _alphabet_index(alphabet: str) -> dict[str, int]:
    return {c: i for i, c in enumerate(alphabet)}


def phoc_dim(config: PhocConfig) -> int:
    return len(config.alphabet) * sum(config.levels)


def _regions(k: int, n: int, level: int) -> range:
    """Regions of ``level`` holding at least half of character ``k`` of ``n``.

    Character k spans [k/n, (k+1)/n), region r spans [r/L, (r+1)/L). Scaled by
    n*L the overlap is integer, and the half-width test becomes 2*overlap >= L.
    """
    lo = (k * level) // n
    hi = min(-((-(k + 1) * level) // n), level)
    first, last = hi, lo - 1
    for r in range(lo, hi):
        overlap = min((k + 1) * level, (r + 1) * n) - max(k * level, r * n)
        if 2 * overlap >= level:
            first = min(first, r)
            last = r
    return range(first, last + 1)


def phoc_embed(text: str, config: PhocConfig) -> Embedding:
    text = nfc(text)
    if not text:
        raise PhocError("cannot embed empty text")
    index = config.index
    codes = []
    for ch in text:
        try:
            codes.append(index[ch])
        except KeyError:
            raise PhocError(f"character {ch!r} (U+{ord(ch):04X}) not in PHOC alphabet") from None
    na = len(config.alphabet)
    n = len(codes)
    out = np.zeros(phoc_dim(config), dtype=np.float64)
    base = 0
    for level in config.levels:
        for k, c in enumerate(codes):
            for r in _regions(k, n, level):
                out[base + r * na + c] = 1.0
        base += level * na
    out.flags.writeable = False
    return out
