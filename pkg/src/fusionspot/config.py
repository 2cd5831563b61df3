"""Experiment configuration and seed derivation.

One master ``seed`` drives everything:

* vocabulary and corpus sampling: ``numpy.random.default_rng([seed, 11])``
* recognizer noise seed: first uint64 of ``SeedSequence([seed, 12])``
* image channel seed: first uint64 of ``SeedSequence([seed, 13])``
* record ``i`` draws corruptions at indices ``i * 2**20 + j`` and its word
  image noise at index ``i``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import VocabularySpec

RECORD_DRAW_STRIDE = 1 << 20
PRESETS = ("calibrated-recognition", "calibrated-retrieval", "zero-noise")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSettings:
    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0
    p_swap: float = 0.0
    confusion: dict | None = None


@dataclass(frozen=True)
class ChannelSettings:
    gap: float = 0.0
    sigma_img: float = 0.0
    sigma_synth: float = 0.0
    dim_out: int | None = None


@dataclass(frozen=True)
class PhocSettings:
    alphabet: str = ""  # empty: every code point in the vocabulary
    levels: tuple[int, ...] = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    corpus_size: int = 1000
    K_values: tuple[int, ...] = (1, 2, 3, 4, 8, 16)
    alpha: float = 1.0
    lexicon_path: str | None = None
    output_dir: str = "runs/default"
    l2_normalize: bool = False
    phoc: PhocSettings = field(default_factory=PhocSettings)
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    vocabulary: VocabularySpec = field(default_factory=VocabularySpec)

    def __post_init__(self):
        if not self.K_values:
            raise ConfigError("K_values must be non-empty")
        if any(int(k) < 1 for k in self.K_values):
            raise ConfigError("K_values must be positive")
        if self.corpus_size < 1:
            raise ConfigError(f"corpus_size must be positive, got {self.corpus_size}")
        if self.alpha < 0:
            raise ConfigError("alpha must be non-negative")

    @property
    def corpus_rng(self) -> np.random.Generator:
        return np.random.default_rng([self.seed, 11])

    @property
    def noise_seed(self) -> int:
        return _derived(self.seed, 12)

    @property
    def channel_seed(self) -> int:
        return _derived(self.seed, 13)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_json(self) -> dict:
        data = asdict(self)
        data["K_values"] = list(self.K_values)
        data["phoc"]["levels"] = list(self.phoc.levels)
        data["vocabulary"] = self.vocabulary.to_json()
        return data

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "K_values" in data:
                data["K_values"] = tuple(int(k) for k in data["K_values"])
            if "phoc" in data:
                phoc = dict(data["phoc"])
                if "levels" in phoc:
                    phoc["levels"] = tuple(phoc["levels"])
                data["phoc"] = PhocSettings(**phoc)
            if "noise" in data:
                data["noise"] = NoiseSettings(**data["noise"])
            if "channel" in data:
                data["channel"] = ChannelSettings(**data["channel"])
            if "vocabulary" in data:
                data["vocabulary"] = VocabularySpec.from_json(data["vocabulary"])
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _derived(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1, np.uint64)[0])


def load_config(path_or_preset: str | Path) -> ExperimentConfig:
    """Load a JSON config file, or a shipped preset by name."""
    name = str(path_or_preset)
    if name in PRESETS:
        text = resources.files("fusionspot").joinpath("presets", f"{name}.json").read_text(encoding="utf-8")
    else:
        path = Path(name)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
    try:
        return ExperimentConfig.from_json(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{name}: invalid JSON ({exc})") from None
