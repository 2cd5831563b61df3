"""Word retrieval over a corpus of word images and their recognizer outputs.

All rankers return every record exactly once, best first, ties broken by
record id. Because the tie rule is deterministic it is part of what mAP
measures: reordering a tie group changes AP whenever relevance varies inside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .core import Embedding, EmbeddingStore, RankedList, nfc, rank_by_distance
from .phoc import PhocConfig
from .simchannel import ImageChannel, synth_embed


@dataclass(frozen=True)
class WordRecord:
    record_id: str
    truth: str
    noisy_text: str
    e_w: Embedding
    e_n: Embedding

    def __post_init__(self):
        object.__setattr__(self, "truth", nfc(self.truth))
        object.__setattr__(self, "noisy_text", nfc(self.noisy_text))
        if np.shape(self.e_w) != np.shape(self.e_n):
            raise ValueError(f"record {self.record_id!r}: e_w and e_n differ in dimension")


@dataclass(frozen=True)
class QuerySpec:
    relevant_ids: frozenset[str]
    text: str | None = None
    example_id: str | None = None

    def __post_init__(self):
        if (self.text is None) == (self.example_id is None):
            raise ValueError("exactly one of text / example_id must be given")
        if self.text is not None:
            object.__setattr__(self, "text", nfc(self.text))
        object.__setattr__(self, "relevant_ids", frozenset(self.relevant_ids))


class Corpus:
    """Records plus the read-only stores the rankers share."""

    def __init__(self, records: Iterable[WordRecord]):
        self.records = tuple(records)
        ids = [r.record_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("record ids must be unique")
        self.ids = tuple(ids)
        self.noisy_texts = [r.noisy_text for r in self.records]
        self.truths = [r.truth for r in self.records]

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def image_store(self) -> EmbeddingStore:
        return EmbeddingStore.from_pairs([(r.record_id, r.e_w) for r in self.records])

    @cached_property
    def recognizer_store(self) -> EmbeddingStore:
        return EmbeddingStore.from_pairs([(r.record_id, r.e_n) for r in self.records])

    @cached_property
    def by_truth(self) -> dict[str, frozenset[str]]:
        groups: dict[str, set[str]] = {}
        for r in self.records:
            groups.setdefault(r.truth, set()).add(r.record_id)
        return {k: frozenset(v) for k, v in groups.items()}

    @cached_property
    def _noisy_array(self) -> np.ndarray:
        return np.array(self.noisy_texts, dtype=object)


def as_corpus(corpus: Corpus | Sequence[WordRecord]) -> Corpus:
    return corpus if isinstance(corpus, Corpus) else Corpus(corpus)


def _empty() -> RankedList:
    return RankedList((), ())


def qbs_image(e_t: Embedding, corpus) -> RankedList:
    corpus = as_corpus(corpus)
    if not len(corpus):
        return _empty()
    return rank_by_distance(e_t, corpus.image_store)


def qbs_recognizer(e_t: Embedding, corpus) -> RankedList:
    corpus = as_corpus(corpus)
    if not len(corpus):
        return _empty()
    return rank_by_distance(e_t, corpus.recognizer_store)


def qbe(e_img: Embedding, corpus) -> RankedList:
    """Query by example; the example itself stays in the list."""
    return qbs_image(e_img, corpus)


def qbe_by_id(example_id: str, corpus) -> RankedList:
    corpus = as_corpus(corpus)
    return qbe(corpus.image_store.get(example_id), corpus)


def rank_by_edit_distance(query_text: str, corpus) -> RankedList:
    corpus = as_corpus(corpus)
    if not len(corpus):
        return _empty()
    scores = kernels.levenshtein_many(nfc(query_text), corpus.noisy_texts).astype(np.float64)
    return corpus.image_store.rank(scores)


def _exact_matches(query_text: str, corpus: Corpus) -> np.ndarray:
    return corpus._noisy_array == nfc(query_text)


def naive_merge(query_text: str, e_t: Embedding, corpus) -> RankedList:
    """Records the recognizer read exactly as the query, then everything else.

    Both bands are ordered by image-embedding distance. Tail scores are shifted
    by the largest head distance so scores stay non-decreasing.
    """
    corpus = as_corpus(corpus)
    if not len(corpus):
        return _empty()
    store = corpus.image_store
    dist = store.distances(e_t)
    head = _exact_matches(query_text, corpus)
    if not head.any() or head.all():
        return store.rank(dist)
    shift = float(dist[head].max())
    scores = np.where(head, dist, dist + shift)
    order = np.lexsort((store._id_rank, dist, ~head))
    ids = np.array(store.ids, dtype=object)[order]
    return RankedList(tuple(ids), tuple(scores[order].tolist()))


def query_expansion(query_text: str, e_t: Embedding, corpus, phoc: PhocConfig,
                    channel: ImageChannel) -> RankedList:
    """Re-query the image store with a synthetic rendering of an exact match.

    The seed record is the best-ranked record whose recognizer output equals
    the query; if the recognizer misread a different word as the query, that
    wrong record seeds the re-ranking. Without any exact match the naive
    merge list is returned.
    """
    corpus = as_corpus(corpus)
    merged = naive_merge(query_text, e_t, corpus)
    head = _exact_matches(query_text, corpus)
    if not head.any():
        return merged
    seed_id = merged.ids[0]
    seed_text = corpus.noisy_texts[corpus.image_store._index[seed_id]]
    return rank_by_distance(synth_embed(seed_text, phoc, channel), corpus.image_store)


def _fused(corpus: Corpus, op) -> EmbeddingStore:
    w = corpus.image_store.matrix
    n = corpus.recognizer_store.matrix
    return EmbeddingStore(corpus.ids, op(w, n))


def fuse_average(corpus) -> EmbeddingStore:
    return _fused(as_corpus(corpus), lambda w, n: (w + n) / 2.0)


def fuse_max(corpus) -> EmbeddingStore:
    return _fused(as_corpus(corpus), np.maximum)


def average_precision(ranked: RankedList, relevant: Iterable[str]) -> float:
    """Mean over relevant items of precision at the rank where each appears."""
    relevant = frozenset(relevant)
    if not relevant:
        raise ValueError("average precision needs a non-empty relevant set")
    hits = 0
    total = 0.0
    for rank, rid in enumerate(ranked.ids, 1):
        if rid in relevant:
            hits += 1
            total += hits / rank
            if hits == len(relevant):
                break
    return total / len(relevant)


def first_relevant_rank(ranked: RankedList, relevant: Iterable[str]) -> int | None:
    relevant = frozenset(relevant)
    for rank, rid in enumerate(ranked.ids, 1):
        if rid in relevant:
            return rank
    return None


def mean_average_precision(queries: Sequence[tuple[QuerySpec, RankedList]]) -> float:
    if not queries:
        raise ValueError("mAP of an empty query set")
    return float(np.mean([average_precision(lst, q.relevant_ids) for q, lst in queries]))


def build_queries(corpus) -> list[QuerySpec]:
    """One query-by-string per unique ground-truth word, sorted by text."""
    corpus = as_corpus(corpus)
    return [QuerySpec(text=w, relevant_ids=ids) for w, ids in sorted(corpus.by_truth.items())]


def build_example_queries(corpus) -> list[QuerySpec]:
    """One query-by-example per record, relevant = records sharing its truth."""
    corpus = as_corpus(corpus)
    groups = corpus.by_truth
    return [QuerySpec(example_id=r.record_id, relevant_ids=groups[r.truth]) for r in corpus.records]
