"""Synthetic word corpora: inflected pseudo-words drawn with Zipf frequencies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import nfc
from .phoc import DEFAULT_LEVELS, PhocConfig, phoc_embed

DEVANAGARI_CONSONANTS = "कखगघचछजझटठडढतथदधनपफबभमयरलवशसह"
DEVANAGARI_VOWEL_SIGNS = "ािीुूेैोौ"
DEFAULT_SUFFIXES = ("", "ा", "े", "ी", "ों", "ने", "को", "ता", "ती")


@dataclass(frozen=True)
class VocabularySpec:
    size: int = 3000
    consonants: str = DEVANAGARI_CONSONANTS
    vowel_signs: str = DEVANAGARI_VOWEL_SIGNS
    suffixes: tuple[str, ...] = DEFAULT_SUFFIXES
    p_vowel_sign: float = 0.55
    stem_syllables: tuple[int, ...] = (1, 2, 3, 4)
    stem_syllable_weights: tuple[float, ...] = (0.15, 0.4, 0.3, 0.15)
    forms_per_stem: tuple[int, int] = (1, 4)
    zipf_exponent: float = 1.0
    levels: tuple[int, ...] = field(default=DEFAULT_LEVELS)

    @classmethod
    def from_json(cls, data: dict) -> "VocabularySpec":
        data = dict(data)
        for key in ("suffixes", "stem_syllables", "stem_syllable_weights", "forms_per_stem", "levels"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "consonants": self.consonants,
            "vowel_signs": self.vowel_signs,
            "suffixes": list(self.suffixes),
            "p_vowel_sign": self.p_vowel_sign,
            "stem_syllables": list(self.stem_syllables),
            "stem_syllable_weights": list(self.stem_syllable_weights),
            "forms_per_stem": list(self.forms_per_stem),
            "zipf_exponent": self.zipf_exponent,
            "levels": list(self.levels),
        }

    @property
    def alphabet(self) -> str:
        chars = set(self.consonants) | set(self.vowel_signs)
        for s in self.suffixes:
            chars.update(s)
        return "".join(sorted(nfc("".join(chars))))


def _stem(spec: VocabularySpec, rng: np.random.Generator) -> str:
    weights = np.asarray(spec.stem_syllable_weights, dtype=float)
    n = int(rng.choice(spec.stem_syllables, p=weights / weights.sum()))
    out = []
    for _ in range(n):
        out.append(spec.consonants[rng.integers(len(spec.consonants))])
        if spec.vowel_signs and rng.random() < spec.p_vowel_sign:
            out.append(spec.vowel_signs[rng.integers(len(spec.vowel_signs))])
    return "".join(out)


def generate_vocabulary(spec: VocabularySpec, rng: np.random.Generator) -> list[str]:
    """Distinct words whose PHOC vectors are pairwise distinct, in generation order.

    PHOC collisions are rejected so that a noiseless embedding identifies its
    word uniquely.
    """
    phoc = PhocConfig(spec.alphabet, spec.levels)
    words: list[str] = []
    seen_words: set[str] = set()
    seen_phoc: set[bytes] = set()
    lo, hi = spec.forms_per_stem
    stalls = 0
    while len(words) < spec.size:
        stem = _stem(spec, rng)
        n_forms = int(rng.integers(lo, hi + 1))
        picks = rng.choice(len(spec.suffixes), size=min(n_forms, len(spec.suffixes)), replace=False)
        added = False
        for i in sorted(picks):
            w = nfc(stem + spec.suffixes[i])
            if len(w) < 2 or w in seen_words:
                continue
            key = np.packbits(phoc_embed(w, phoc).astype(np.uint8)).tobytes()
            if key in seen_phoc:
                continue
            seen_words.add(w)
            seen_phoc.add(key)
            words.append(w)
            added = True
            if len(words) == spec.size:
                break
        stalls = 0 if added else stalls + 1
        if stalls > 10000:
            raise RuntimeError(f"vocabulary space exhausted at {len(words)} words")
    return words


def sample_corpus(vocabulary: list[str], size: int, zipf_exponent: float,
                  rng: np.random.Generator) -> list[str]:
    """Draw ``size`` word tokens; vocabulary rank r has weight 1 / r**s."""
    if size < 1:
        raise ValueError("corpus size must be positive")
    ranks = np.arange(1, len(vocabulary) + 1, dtype=float)
    p = ranks ** -zipf_exponent
    p /= p.sum()
    idx = rng.choice(len(vocabulary), size=size, p=p)
    return [vocabulary[i] for i in idx]
