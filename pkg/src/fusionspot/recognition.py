"""Choosing one transcription out of a recognizer's K-best list."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Embedding, EmbeddingStore, RankedList, nfc
from .phoc import PhocConfig
from .simchannel import HypothesisSet, ImageChannel, synth_embed

log = logging.getLogger(__name__)

EmbedFn = Callable[[str], Embedding]


class Strategy(str, Enum):
    TOP1 = "top1"
    EMBED_RERANK = "embed_rerank"
    CONF_FUSION = "conf_fusion"
    SYNTH_RERANK = "synth_rerank"
    LEXICON_RERANK = "lexicon_rerank"


class NoEmbeddableHypothesis(ValueError):
    pass


class Lexicon:
    """Set of valid words; membership is exact NFC equality."""

    def __init__(self, words: Iterable[str]):
        self.words = frozenset(nfc(w) for w in words)

    def __contains__(self, word: str) -> bool:
        return nfc(word) in self.words

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(sorted(self.words))

    @classmethod
    def load(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls(line.strip() for line in fh if line.strip())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for w in sorted(self.words):
                fh.write(w + "\n")


@dataclass(frozen=True)
class RecognitionResult:
    record_id: str
    prediction: str
    strategy: Strategy
    ranked_hypotheses: RankedList
    fallback: bool = False

    def __post_init__(self):
        if not self.ranked_hypotheses or self.ranked_hypotheses.ids[0] != self.prediction:
            raise ValueError("prediction must head the ranked hypotheses")


def _require(hyps: HypothesisSet) -> None:
    if len(hyps) == 0:
        raise ValueError("empty hypothesis set")


def select_top1(hyps: HypothesisSet, record_id: str = "") -> RecognitionResult:
    _require(hyps)
    ranked = RankedList(tuple(hyps.texts), tuple(1.0 - c for _, c in hyps.items))
    return RecognitionResult(record_id, ranked.ids[0], Strategy.TOP1, ranked)


def _hypothesis_store(texts: Sequence[str], embed: EmbedFn) -> EmbeddingStore:
    pairs = []
    for t in texts:
        try:
            pairs.append((t, embed(t)))
        except ValueError as exc:
            log.warning("skipping hypothesis %r: %s", t, exc)
    if not pairs:
        raise NoEmbeddableHypothesis(f"no embeddable hypothesis among {list(texts)!r}")
    return EmbeddingStore.from_pairs(pairs)


def _rank(hyps: HypothesisSet, e_img: Embedding, embed: EmbedFn, alpha: float = 0.0) -> RankedList:
    store = _hypothesis_store(hyps.texts, embed)
    scores = store.distances(e_img)
    if alpha:
        conf = dict(hyps.items)
        scores = scores + alpha * np.array([1.0 - conf[t] for t in store.ids])
    return store.rank(scores)


def select_by_embedding(hyps: HypothesisSet, e_img: Embedding, embed_text: EmbedFn,
                        record_id: str = "") -> RecognitionResult:
    _require(hyps)
    ranked = _rank(hyps, e_img, embed_text)
    return RecognitionResult(record_id, ranked.ids[0], Strategy.EMBED_RERANK, ranked)


def select_by_confidence_fusion(hyps: HypothesisSet, e_img: Embedding, embed_text: EmbedFn,
                                alpha: float = 1.0, record_id: str = "") -> RecognitionResult:
    """Score = distance(e_img, E_m) + alpha * (1 - confidence); lowest wins."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    _require(hyps)
    ranked = _rank(hyps, e_img, embed_text, alpha)
    return RecognitionResult(record_id, ranked.ids[0], Strategy.CONF_FUSION, ranked)


def select_by_synth(hyps: HypothesisSet, e_img: Embedding, phoc: PhocConfig, channel: ImageChannel,
                    record_id: str = "", embed_synth: EmbedFn | None = None) -> RecognitionResult:
    _require(hyps)
    if embed_synth is None:
        def embed_synth(text):
            return synth_embed(text, phoc, channel)
    ranked = _rank(hyps, e_img, embed_synth)
    return RecognitionResult(record_id, ranked.ids[0], Strategy.SYNTH_RERANK, ranked)


def select_with_lexicon(hyps: HypothesisSet, lexicon: Lexicon, e_img: Embedding, embed_text: EmbedFn,
                        record_id: str = "") -> RecognitionResult:
    """Rank only lexicon words; with no survivor fall back to the full list."""
    _require(hyps)
    kept = HypothesisSet(tuple((t, c) for t, c in hyps.items if t in lexicon))
    fallback = len(kept) == 0
    if not fallback:
        try:
            ranked = _rank(kept, e_img, embed_text)
        except NoEmbeddableHypothesis:
            fallback = True
    if fallback:
        ranked = _rank(hyps, e_img, embed_text)
    return RecognitionResult(record_id, ranked.ids[0], Strategy.LEXICON_RERANK, ranked, fallback)


def word_accuracy(predictions: Iterable[tuple[str, str]]) -> float:
    """Exact-match rate of (prediction, truth) pairs.

    For isolated words WER = (S + D + I) / (S + D + C) has no word-level
    insertions or deletions, so 1 - WER = C / N.
    """
    n = correct = 0
    for pred, truth in predictions:
        n += 1
        correct += nfc(pred) == nfc(truth)
    if n == 0:
        raise ValueError("word_accuracy of an empty sequence")
    return correct / n


def topk_accuracy(hypothesis_sets: Iterable[tuple[HypothesisSet, str]], k: int,
                  lexicon: Lexicon | None = None) -> float:
    """Fraction of sets whose first k hypotheses contain the truth.

    With a lexicon, non-members are removed before truncating to k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = hits = 0
    for hyps, truth in hypothesis_sets:
        n += 1
        texts = hyps.texts
        if lexicon is not None:
            texts = [t for t in texts if t in lexicon]
        hits += nfc(truth) in texts[:k]
    if n == 0:
        raise ValueError("topk_accuracy of an empty sequence")
    return hits / n
