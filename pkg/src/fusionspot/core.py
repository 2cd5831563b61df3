"""Shared math: embeddings, exhaustive nearest-neighbour ranking, edit distance."""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels

Embedding = np.ndarray


class DimensionMismatch(ValueError):
    pass


class StoreFormatError(ValueError):
    pass


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def make_embedding(values: Iterable[float]) -> Embedding:
    """Validate and freeze a vector as an embedding (1-D, finite, read-only)."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"embedding must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding contains NaN or Inf")
    arr.flags.writeable = False
    return arr


def euclidean_distance(a: Embedding, b: Embedding) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    col = np.ascontiguousarray(b.reshape(-1, 1))
    return math.sqrt(kernels.sq_distances(col, np.ascontiguousarray(a))[0])


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over NFC code points."""
    return kernels.levenshtein(nfc(a), nfc(b))


@dataclass(frozen=True)
class RankedList:
    """Ranked ids, best first; lower score is better."""

    ids: tuple[str, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.scores):
            raise ValueError("ids and scores differ in length")

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(zip(self.ids, self.scores))

    def __getitem__(self, i: int) -> tuple[str, float]:
        return self.ids[i], self.scores[i]

    @property
    def items(self) -> list[tuple[str, float]]:
        return list(zip(self.ids, self.scores))

    @classmethod
    def from_scores(cls, ids: Sequence[str], scores: Sequence[float]) -> "RankedList":
        """Sort ascending by score, ties by id."""
        order = sorted(range(len(ids)), key=lambda i: (scores[i], ids[i]))
        return cls(tuple(ids[i] for i in order), tuple(float(scores[i]) for i in order))


@dataclass(frozen=True)
class EmbeddingStore:
    ids: tuple[str, ...]
    matrix: np.ndarray
    _id_rank: np.ndarray = field(init=False, repr=False, compare=False)
    _matrix_t: np.ndarray = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64, ndmin=2)
        if len(self.ids) == 0:
            matrix = matrix.reshape(0, matrix.shape[-1] if matrix.size else 0)
        if matrix.shape[0] != len(self.ids):
            raise ValueError(f"{len(self.ids)} ids but {matrix.shape[0]} vectors")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("store contains NaN or Inf")
        index = {rid: i for i, rid in enumerate(self.ids)}
        if len(index) != len(self.ids):
            raise ValueError("duplicate record ids in store")
        matrix.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_index", index)
        rank = np.empty(len(self.ids), dtype=np.int64)
        rank[np.argsort(np.array(self.ids, dtype=object), kind="stable")] = np.arange(len(self.ids))
        object.__setattr__(self, "_id_rank", rank)
        object.__setattr__(self, "_matrix_t", np.ascontiguousarray(matrix.T))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, Embedding]], dim: int | None = None) -> "EmbeddingStore":
        pairs = list(pairs)
        if not pairs:
            return cls((), np.zeros((0, dim or 0)))
        ids = [p[0] for p in pairs]
        vecs = [np.asarray(p[1], dtype=np.float64) for p in pairs]
        d = vecs[0].shape[0] if dim is None else dim
        for rid, v in zip(ids, vecs):
            if v.shape != (d,):
                raise DimensionMismatch(f"record {rid!r}: dimension {v.shape[0]} != {d}")
        return cls(tuple(ids), np.stack(vecs))

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._index

    def get(self, record_id: str) -> Embedding:
        try:
            return self.matrix[self._index[record_id]]
        except KeyError:
            raise KeyError(f"unknown record id {record_id!r}") from None

    def distances(self, query: Embedding) -> np.ndarray:
        query = np.ascontiguousarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise DimensionMismatch(f"query dimension {query.shape[0]} != store dimension {self.dim}")
        return np.sqrt(kernels.sq_distances(self._matrix_t, query))

    def rank(self, scores: np.ndarray) -> RankedList:
        """Rank store entries by precomputed per-entry scores, ties by id."""
        order = np.lexsort((self._id_rank, scores))
        ids = np.array(self.ids, dtype=object)[order]
        return RankedList(tuple(ids), tuple(scores[order].tolist()))


def rank_by_distance(query: Embedding, store: EmbeddingStore) -> RankedList:
    if len(store) == 0:
        return RankedList((), ())
    return store.rank(store.distances(query))


def save_store(store: EmbeddingStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rid, vec in zip(store.ids, store.matrix):
            fh.write(json.dumps({"id": rid, "vec": [float(x) for x in vec]}, ensure_ascii=False))
            fh.write("\n")


def load_store(path: str | Path) -> EmbeddingStore:
    """Read a JSON Lines store; the first line fixes the dimension."""
    ids, vecs, dim = [], [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                rid, vec = rec["id"], rec["vec"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise StoreFormatError(f"{path}:{lineno}: malformed record ({exc})") from None
            if not isinstance(rid, str) or not isinstance(vec, list):
                raise StoreFormatError(f"{path}:{lineno}: expected string id and list vec")
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise StoreFormatError(f"{path}:{lineno}: vector length {len(vec)} != {dim}")
            ids.append(rid)
            vecs.append(vec)
    if len(set(ids)) != len(ids):
        seen, dup = set(), None
        for rid in ids:
            if rid in seen:
                dup = rid
                break
            seen.add(rid)
        raise StoreFormatError(f"{path}: duplicate id {dup!r}")
    if not ids:
        return EmbeddingStore((), np.zeros((0, 0)))
    try:
        return EmbeddingStore(tuple(ids), np.array(vecs, dtype=np.float64))
    except ValueError as exc:
        raise StoreFormatError(f"{path}: {exc}") from None
