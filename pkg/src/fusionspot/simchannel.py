"""Seeded stand-ins for the text recognizer and the image embedding stream.

Randomness is counter based: corruption draw ``i`` under seed ``s`` is a pure
function of ``(word, s, i)``, so draws can be generated in any order or in
parallel and still agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .core import Embedding, levenshtein, nfc
from .phoc import PhocConfig, phoc_embed

MASK64 = (1 << 64) - 1
ATTEMPTS_PER_HYPOTHESIS = 50
# keeps confidences strictly descending when edit distances tie
CONF_RANK_STEP = 1e-3


@dataclass(frozen=True)
class NoiseModel:
    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0
    seed: int = 0
    p_swap: float = 0.0
    alphabet: str = ""
    confusion: Mapping[str, Mapping[str, float]] | None = None
    _tables: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("p_sub", "p_del", "p_ins", "p_swap"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")
        if self.p_sub + self.p_del > 1.0:
            raise ValueError("p_sub + p_del must not exceed 1")
        object.__setattr__(self, "alphabet", nfc(self.alphabet))
        if self.confusion:
            conf = {}
            for src, cands in self.confusion.items():
                for dst, w in cands.items():
                    if not w > 0:
                        raise ValueError(f"confusion weight {src!r}->{dst!r} must be positive")
                conf[nfc(src)] = {nfc(d): float(w) for d, w in cands.items()}
            object.__setattr__(self, "confusion", conf)
        object.__setattr__(self, "seed", int(self.seed) & MASK64)

    @property
    def is_zero(self) -> bool:
        return self.p_sub == 0 and self.p_del == 0 and self.p_ins == 0 and self.p_swap == 0

    def substitution_table(self, ch: str) -> tuple[str, list[float]]:
        """Candidates and cumulative (normalised) weights for substituting ``ch``."""
        table = self._tables.get(ch)
        if table is None:
            if self.confusion and ch in self.confusion:
                items = sorted(self.confusion[ch].items())
            else:
                items = [(c, 1.0) for c in self.alphabet if c != ch]
            total = sum(w for _, w in items)
            cum, acc = [], 0.0
            for _, w in items:
                acc += w
                cum.append(acc / total)
            if cum:
                cum[-1] = 1.0
            table = ("".join(c for c, _ in items), cum)
            self._tables[ch] = table
        return table


@dataclass(frozen=True)
class HypothesisSet:
    """K-best recognizer output, highest confidence first."""

    items: tuple[tuple[str, float], ...]

    def __post_init__(self):
        items = tuple((nfc(t), float(c)) for t, c in self.items)
        texts = [t for t, _ in items]
        if len(set(texts)) != len(texts):
            raise ValueError("hypothesis texts must be unique")
        for t, c in items:
            if not 0.0 < c <= 1.0:
                raise ValueError(f"confidence {c} of {t!r} outside (0, 1]")
        for (t1, c1), (t2, c2) in zip(items, items[1:]):
            if not c1 > c2:
                raise ValueError(f"confidences not strictly descending at {t1!r}={c1}, {t2!r}={c2}")
        object.__setattr__(self, "items", items)

    @property
    def K(self) -> int:
        return len(self.items)

    @property
    def texts(self) -> list[str]:
        return [t for t, _ in self.items]

    def __len__(self) -> int:
        return len(self.items)

    def top(self, k: int) -> "HypothesisSet":
        return HypothesisSet(self.items[:k])


def _tables(word: str, noise: NoiseModel) -> list:
    return [noise.substitution_table(ch) for ch in word]


def corrupt(word: str, noise: NoiseModel, draw_index: int) -> str:
    """Apply per-character substitution/deletion, per-gap insertion and
    adjacent transposition (``p_swap``; swapped characters are not further edited).

    Deterministic in ``(word, noise.seed, draw_index)``. May return "".
    """
    word = nfc(word)
    if noise.is_zero:
        return word
    key = kernels.draw_key(noise.seed, draw_index)
    return kernels.corrupt_one(word, noise.alphabet, _tables(word, noise),
                               noise.p_sub, noise.p_del, noise.p_ins, noise.p_swap, key)


def generate_hypotheses(word: str, K: int, noise: NoiseModel, draw_offset: int = 0) -> HypothesisSet:
    """Simulated K-best list for one word image.

    Attempt ``j`` is ``corrupt(word, noise, draw_offset + j)``; sampling stops
    after K distinct strings or ``50*K`` attempts. Confidence is
    ``exp(-(d + rank * 1e-3))`` where ``d`` is the edit distance to the first
    draw and ``rank`` the position after sorting by ``(d, first-seen order)``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    word = nfc(word)
    if noise.is_zero:
        return HypothesisSet(((word, 1.0),))
    drawn = kernels.draw_distinct(word, noise.alphabet, _tables(word, noise),
                                  noise.p_sub, noise.p_del, noise.p_ins, noise.p_swap,
                                  noise.seed, draw_offset, K, ATTEMPTS_PER_HYPOTHESIS * K)
    return hypotheses_from_draws(drawn)


def hypotheses_from_draws(drawn: Sequence[str]) -> HypothesisSet:
    first = drawn[0]
    dists = [levenshtein(s, first) for s in drawn]
    order = sorted(range(len(drawn)), key=lambda i: (dists[i], i))
    return HypothesisSet(tuple(
        (drawn[i], math.exp(-(dists[i] + rank * CONF_RANK_STEP))) for rank, i in enumerate(order)
    ))


@dataclass(frozen=True)
class ImageChannel:
    """Shared image-stream geometry: a fixed projection plus Gaussian noise.

    Text embeddings enter the common space by zero-padding the PHOC vector;
    only image-side embeddings (real and synthetic) go through ``projection``.
    """

    projection: np.ndarray
    sigma_img: float = 0.0
    sigma_synth: float = 0.0
    seed: int = 0

    def __post_init__(self):
        proj = np.array(self.projection, dtype=np.float64, ndmin=2)
        if proj.shape[0] < proj.shape[1]:
            raise ValueError(f"projection {proj.shape} cannot have full column rank")
        if np.linalg.matrix_rank(proj) < proj.shape[1]:
            raise ValueError("projection must have full column rank")
        if self.sigma_img < 0 or self.sigma_synth < 0:
            raise ValueError("noise levels must be non-negative")
        if self.sigma_synth > self.sigma_img:
            raise ValueError("sigma_synth must not exceed sigma_img")
        proj.flags.writeable = False
        object.__setattr__(self, "projection", proj)

    @classmethod
    def from_seed(cls, dim_in: int, seed: int, gap: float = 0.0, sigma_img: float = 0.0,
                  sigma_synth: float = 0.0, dim_out: int | None = None) -> "ImageChannel":
        """Projection ``[I; 0] + gap * G / sqrt(dim_in)`` with G standard normal."""
        dim_out = dim_in if dim_out is None else dim_out
        base = np.zeros((dim_out, dim_in))
        base[:dim_in, :dim_in] = np.eye(dim_in)
        if gap:
            g = np.random.default_rng([int(seed), 0]).standard_normal((dim_out, dim_in))
            base = base + gap * g / math.sqrt(dim_in)
        return cls(base, sigma_img=sigma_img, sigma_synth=sigma_synth, seed=int(seed))

    @property
    def dim_in(self) -> int:
        return self.projection.shape[1]

    @property
    def dim_out(self) -> int:
        return self.projection.shape[0]

    def project(self, phoc_vec: np.ndarray) -> np.ndarray:
        return self.projection @ phoc_vec

    def lift_text(self, phoc_vec: np.ndarray) -> np.ndarray:
        """Place a text-side PHOC vector in the common space (zero padding)."""
        if self.dim_out == self.dim_in:
            return np.asarray(phoc_vec, dtype=np.float64)
        out = np.zeros(self.dim_out)
        out[: self.dim_in] = phoc_vec
        return out

    def noise(self, sigma: float, stream: int, draw_index: int) -> np.ndarray:
        if sigma == 0:
            return np.zeros(self.dim_out)
        rng = np.random.default_rng([self.seed, stream, int(draw_index)])
        return sigma * rng.standard_normal(self.dim_out)


_REAL_STREAM = 1
_SYNTH_STREAM = 2


def _frozen(vec: np.ndarray) -> Embedding:
    vec = np.ascontiguousarray(vec, dtype=np.float64)
    vec.flags.writeable = False
    return vec


def text_embed(text: str, phoc: PhocConfig, channel: ImageChannel) -> Embedding:
    """Label-stream embedding of a string in the common space."""
    return _frozen(channel.lift_text(phoc_embed(text, phoc)))


def image_embed(label: str, phoc: PhocConfig, channel: ImageChannel, draw_index: int) -> Embedding:
    """Real-image embedding: projected PHOC plus N(0, sigma_img) noise."""
    vec = channel.project(phoc_embed(label, phoc))
    return _frozen(vec + channel.noise(channel.sigma_img, _REAL_STREAM, draw_index))


def synth_embed(text: str, phoc: PhocConfig, channel: ImageChannel, draw_index: int = 0) -> Embedding:
    """Synthetic rendering of ``text`` through the image stream."""
    vec = channel.project(phoc_embed(text, phoc))
    return _frozen(vec + channel.noise(channel.sigma_synth, _SYNTH_STREAM, draw_index))
