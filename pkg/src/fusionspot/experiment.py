"""Corpus generation, on-disk layout, and the recognition/retrieval evaluations.

A corpus directory holds::

    manifest.jsonl      {"id", "truth"}
    hyps_K<k>.jsonl     {"id", "truth", "hyps": [{"text", "conf"}]}, one file per K
    e_w.jsonl           word-image embeddings {"id", "vec"}
    e_n.jsonl           embeddings of the recognizer's top-1 output
    lexicon.txt         one word per line (optional)
    phoc.json           {"alphabet", "levels"} (optional)
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import logging
import os
import re
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .config import RECORD_DRAW_STRIDE, ExperimentConfig
from .core import EmbeddingStore, StoreFormatError, load_store, nfc, rank_by_distance, save_store
from .corpus import generate_vocabulary, sample_corpus
from .phoc import PhocConfig, PhocError
from .recognition import (
    Lexicon,
    NoEmbeddableHypothesis,
    Strategy,
    select_by_confidence_fusion,
    select_by_embedding,
    select_by_synth,
    select_top1,
    select_with_lexicon,
    topk_accuracy,
)
from .retrieval import (
    Corpus,
    WordRecord,
    build_example_queries,
    build_queries,
    fuse_average,
    fuse_max,
    naive_merge,
    qbe_by_id,
    qbs_image,
    qbs_recognizer,
    query_expansion,
    rank_by_edit_distance,
)
from .simchannel import (
    HypothesisSet,
    ImageChannel,
    NoiseModel,
    generate_hypotheses,
    image_embed,
    synth_embed,
    text_embed,
)

log = logging.getLogger(__name__)

MANIFEST = "manifest.jsonl"
E_W = "e_w.jsonl"
E_N = "e_n.jsonl"
LEXICON = "lexicon.txt"
PHOC = "phoc.json"
RECOGNITION_REPORT = "recognition.csv"
TOPK_REPORT = "topk_accuracy.csv"
RETRIEVAL_REPORT = "retrieval.csv"
AP_DUMP = "retrieval_ap.jsonl"

RECOGNITION_COLUMNS = ("strategy", "K", "alpha", "lexicon", "word_accuracy", "fallback_rate")
TOPK_COLUMNS = ("K", "unconstrained", "lexicon")
RETRIEVAL_COLUMNS = ("method", "Q", "mAP", "mean_rank_of_first_relevant")
RETRIEVAL_METHODS = ("edit_distance", "qbs_recognizer", "qbs_image", "qbe",
                     "naive_merge", "query_expansion", "avg_fusion", "max_fusion")

_HYPS_NAME = re.compile(r"hyps_K(\d+)\.jsonl$")


class CorpusError(ValueError):
    pass


def hyps_filename(k: int) -> str:
    return f"hyps_K{k}.jsonl"


@dataclass
class CorpusData:
    ids: list[str]
    truths: list[str | None]
    hypotheses: dict[int, list[HypothesisSet]]
    e_w: EmbeddingStore
    e_n: EmbeddingStore
    phoc: PhocConfig
    lexicon: Lexicon | None = None
    lexicon_name: str = "none"
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {rid: i for i, rid in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def noisy_texts(self) -> list[str]:
        """Recognizer top-1 output per record."""
        sets = self.hypotheses[min(self.hypotheses)]
        return [h.items[0][0] if len(h) else "" for h in sets]

    def sets_for(self, k: int) -> list[HypothesisSet]:
        """Hypothesis sets for K=k, truncating the nearest larger file if needed."""
        if k in self.hypotheses:
            return self.hypotheses[k]
        larger = [K for K in self.hypotheses if K > k]
        src = min(larger) if larger else max(self.hypotheses)
        return [h.top(k) for h in self.hypotheses[src]]


# --- generation -----------------------------------------------------------

def build_channel(config: ExperimentConfig, phoc: PhocConfig) -> ImageChannel:
    from .phoc import phoc_dim

    ch = config.channel
    return ImageChannel.from_seed(phoc_dim(phoc), config.channel_seed, gap=ch.gap,
                                  sigma_img=ch.sigma_img, sigma_synth=ch.sigma_synth,
                                  dim_out=ch.dim_out)


def build_noise(config: ExperimentConfig, phoc: PhocConfig) -> NoiseModel:
    n = config.noise
    return NoiseModel(n.p_sub, n.p_del, n.p_ins, seed=config.noise_seed, p_swap=n.p_swap,
                      alphabet=phoc.alphabet, confusion=n.confusion)


def _text_or_zero(text: str, phoc: PhocConfig, channel: ImageChannel) -> np.ndarray:
    """Text embedding; an empty recognizer output maps to the zero vector."""
    if not text:
        return np.zeros(channel.dim_out)
    return text_embed(text, phoc, channel)


def generate(config: ExperimentConfig) -> CorpusData:
    rng = config.corpus_rng
    vocab = generate_vocabulary(config.vocabulary, rng)
    words = sample_corpus(vocab, config.corpus_size, config.vocabulary.zipf_exponent, rng)
    if config.phoc.alphabet:
        phoc = PhocConfig(config.phoc.alphabet, config.phoc.levels)
    else:
        phoc = PhocConfig.from_corpus(vocab, config.phoc.levels)
    noise = build_noise(config, phoc)
    channel = build_channel(config, phoc)
    width = max(6, len(str(len(words) - 1)))
    ids = [f"w{i:0{width}d}" for i in range(len(words))]
    hyps = {
        k: [generate_hypotheses(w, k, noise, draw_offset=i * RECORD_DRAW_STRIDE) for i, w in enumerate(words)]
        for k in sorted(set(config.K_values))
    }
    e_w = EmbeddingStore(tuple(ids), np.stack([image_embed(w, phoc, channel, i) for i, w in enumerate(words)]))
    top1 = [h.items[0][0] for h in hyps[min(hyps)]]
    cache: dict[str, np.ndarray] = {}
    rows = []
    for t in top1:
        if t not in cache:
            cache[t] = _text_or_zero(t, phoc, channel)
        rows.append(cache[t])
    e_n = EmbeddingStore(tuple(ids), np.stack(rows))
    return CorpusData(ids, list(words), hyps, e_w, e_n, phoc, Lexicon(vocab), LEXICON)


# --- file io -------------------------------------------------------------

@contextlib.contextmanager
def atomic_write(path: str | Path) -> Iterator[io.TextIOWrapper]:
    """Write to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def ensure_dir(path: str | Path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CorpusError(f"output directory {path} is not writable: {exc}") from None
    return path


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_corpus(data: CorpusData, out_dir: str | Path) -> Path:
    out = ensure_dir(out_dir)
    with atomic_write(out / MANIFEST) as fh:
        for rid, truth in zip(data.ids, data.truths):
            fh.write(_dump({"id": rid, "truth": truth}) + "\n")
    for k, sets in sorted(data.hypotheses.items()):
        with atomic_write(out / hyps_filename(k)) as fh:
            for rid, truth, h in zip(data.ids, data.truths, sets):
                hyps = [{"text": t, "conf": c} for t, c in h.items]
                fh.write(_dump({"id": rid, "truth": truth, "hyps": hyps}) + "\n")
    for name, store in ((E_W, data.e_w), (E_N, data.e_n)):
        with atomic_write(out / name) as fh:
            buf = io.StringIO()
            save_store_to(store, buf)
            fh.write(buf.getvalue())
    if data.lexicon is not None:
        with atomic_write(out / LEXICON) as fh:
            for w in data.lexicon:
                fh.write(w + "\n")
    with atomic_write(out / PHOC) as fh:
        fh.write(_dump(data.phoc.to_json()) + "\n")
    return out


def save_store_to(store: EmbeddingStore, fh) -> None:
    for rid, vec in zip(store.ids, store.matrix):
        fh.write(_dump({"id": rid, "vec": vec.tolist()}) + "\n")


def _read_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise CorpusError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, rec


def read_manifest(path: Path) -> tuple[list[str], list[str | None]]:
    ids, truths, seen = [], [], set()
    for lineno, rec in _read_jsonl(path):
        rid = rec.get("id")
        if not isinstance(rid, str):
            raise CorpusError(f"{path}:{lineno}: missing string id")
        if rid in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate id {rid!r}")
        seen.add(rid)
        truth = rec.get("truth")
        ids.append(rid)
        truths.append(nfc(truth) if isinstance(truth, str) else None)
    return ids, truths


def read_hypotheses(path: Path) -> dict[str, tuple[str | None, HypothesisSet]]:
    out: dict[str, tuple[str | None, HypothesisSet]] = {}
    for lineno, rec in _read_jsonl(path):
        rid = rec.get("id")
        if not isinstance(rid, str):
            raise CorpusError(f"{path}:{lineno}: missing string id")
        if rid in out:
            raise CorpusError(f"{path}:{lineno}: duplicate id {rid!r}")
        try:
            items = tuple((h["text"], h["conf"]) for h in rec["hyps"])
            hs = HypothesisSet(items)
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"{path}:{lineno}: malformed hyps ({exc})") from None
        except ValueError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
        if len(hs) == 0:
            raise CorpusError(f"{path}:{lineno}: empty hypothesis list")
        truth = rec.get("truth")
        out[rid] = (nfc(truth) if isinstance(truth, str) else None, hs)
    return out


def _hyps_k(path: Path, sets: dict) -> int:
    m = _HYPS_NAME.search(path.name)
    if m:
        return int(m.group(1))
    return max(len(h) for _, h in sets.values())


def _check_ids(expected: list[str], got, what: str) -> None:
    got = list(got)
    exp_set, got_set = set(expected), set(got)
    missing = [i for i in expected if i not in got_set]
    extra = [i for i in got if i not in exp_set]
    if missing or extra:
        offenders = (missing + extra)[:10]
        raise CorpusError(
            f"{what}: ids do not match the manifest ({len(missing)} missing, {len(extra)} unexpected); "
            f"first offenders: {offenders}"
        )


def _require(path: Path) -> Path:
    if not path.is_file():
        raise CorpusError(f"missing input file: {path}")
    return path


def load_corpus(corpus_dir: str | Path, lexicon_path: str | Path | None = None) -> CorpusData:
    d = Path(corpus_dir)
    return load_files(
        manifest=_require(d / MANIFEST),
        hyps_files=sorted(d.glob("hyps_K*.jsonl")),
        e_w=_require(d / E_W),
        e_n=_require(d / E_N),
        phoc_path=d / PHOC if (d / PHOC).is_file() else None,
        lexicon_path=lexicon_path or (d / LEXICON if (d / LEXICON).is_file() else None),
    )


def load_files(manifest, hyps_files, e_w, e_n, phoc_path=None, lexicon_path=None) -> CorpusData:
    """Read and cross-validate a corpus: ids, truths and dimensions must agree."""
    manifest = _require(Path(manifest))
    ids, truths = read_manifest(manifest)
    if not ids:
        raise CorpusError(f"{manifest}: no records")
    if not hyps_files:
        raise CorpusError(f"missing input file: no hypothesis file (hyps_K*.jsonl) next to {manifest}")
    hypotheses: dict[int, list[HypothesisSet]] = {}
    for hp in map(Path, hyps_files):
        sets = read_hypotheses(_require(hp))
        _check_ids(ids, sets, str(hp))
        k = _hyps_k(hp, sets)
        if k in hypotheses:
            raise CorpusError(f"{hp}: second hypothesis file for K={k}")
        for rid, truth in zip(ids, truths):
            t = sets[rid][0]
            if t is not None and truth is not None and t != truth:
                raise CorpusError(f"{hp}: truth of {rid!r} differs from manifest")
        hypotheses[k] = [sets[rid][1] for rid in ids]
    stores = []
    for p in (e_w, e_n):
        p = _require(Path(p))
        try:
            store = load_store(p)
        except StoreFormatError as exc:
            raise CorpusError(str(exc)) from None
        _check_ids(ids, store.ids, str(p))
        stores.append(EmbeddingStore(tuple(ids), np.stack([store.get(i) for i in ids])))
    if stores[0].dim != stores[1].dim:
        raise CorpusError(f"dimension mismatch: {e_w} has {stores[0].dim}, {e_n} has {stores[1].dim}")
    if phoc_path is not None:
        phoc = PhocConfig.load(phoc_path)
    else:
        seen = [t for t in truths if t] + [t for sets in hypotheses.values() for h in sets for t in h.texts]
        phoc = PhocConfig.from_corpus(seen)
    lexicon, lex_name = None, "none"
    if lexicon_path is not None:
        lexicon = Lexicon.load(_require(Path(lexicon_path)))
        lex_name = Path(lexicon_path).name
    return CorpusData(ids, truths, hypotheses, stores[0], stores[1], phoc, lexicon, lex_name)


def ingest(manifest, hyps_files, e_w, e_n, out_dir, phoc_path=None, lexicon_path=None) -> CorpusData:
    """Validate externally produced files and copy them into a corpus directory."""
    data = load_files(manifest, hyps_files, e_w, e_n, phoc_path, lexicon_path)
    out = ensure_dir(out_dir)
    copies = [(manifest, MANIFEST), (e_w, E_W), (e_n, E_N)]
    copies += [(hp, hyps_filename(_hyps_k(Path(hp), read_hypotheses(Path(hp))))) for hp in hyps_files]
    if lexicon_path is not None:
        copies.append((lexicon_path, LEXICON))
    for src, name in copies:
        dst = out / name
        if Path(src).resolve() != dst.resolve():
            shutil.copyfile(src, dst)
    if phoc_path is not None:
        if Path(phoc_path).resolve() != (out / PHOC).resolve():
            shutil.copyfile(phoc_path, out / PHOC)
    else:
        with atomic_write(out / PHOC) as fh:
            fh.write(_dump(data.phoc.to_json()) + "\n")
    return data


# --- evaluation ----------------------------------------------------------

class Embedder:
    """Cached text/synthetic embeddings, optionally L2-normalised."""

    def __init__(self, phoc: PhocConfig, channel: ImageChannel, l2_normalize: bool = False):
        self.phoc = phoc
        self.channel = channel
        self.l2_normalize = l2_normalize
        self._text: dict[str, np.ndarray] = {}
        self._synth: dict[str, np.ndarray] = {}

    def prep(self, vec: np.ndarray) -> np.ndarray:
        if not self.l2_normalize:
            return vec
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec

    def prep_store(self, store: EmbeddingStore) -> EmbeddingStore:
        if not self.l2_normalize:
            return store
        m = store.matrix
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        return EmbeddingStore(store.ids, np.divide(m, norms, out=np.array(m), where=norms > 0))

    def text(self, t: str) -> np.ndarray:
        vec = self._text.get(t)
        if vec is None:
            vec = self._text[t] = self.prep(text_embed(t, self.phoc, self.channel))
        return vec

    def synth(self, t: str) -> np.ndarray:
        vec = self._synth.get(t)
        if vec is None:
            vec = self._synth[t] = self.prep(synth_embed(t, self.phoc, self.channel))
        return vec


def _channel_for(data: CorpusData, config: ExperimentConfig) -> ImageChannel:
    channel = build_channel(config, data.phoc)
    if channel.dim_out != data.e_w.dim:
        raise CorpusError(
            f"embedding dimension {data.e_w.dim} does not match the configured channel ({channel.dim_out})"
        )
    return channel


def evaluate_recognition(data: CorpusData, config: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    """Word accuracy per (strategy, K) and the top-K accuracy table."""
    embedder = Embedder(data.phoc, _channel_for(data, config), config.l2_normalize)
    lexicon = data.lexicon
    if lexicon is None:
        lexicon = Lexicon(t for t in data.truths if t)
    labeled = [i for i, t in enumerate(data.truths) if t is not None]
    if not labeled:
        raise CorpusError("no labeled records to evaluate")
    e_w = embedder.prep_store(data.e_w).matrix
    rows = []
    for k in config.K_values:
        sets = data.sets_for(k)
        correct = dict.fromkeys(Strategy, 0)
        fallbacks = 0
        for i in labeled:
            h, truth, e_img = sets[i], data.truths[i], e_w[i]
            try:
                picks = {
                    Strategy.TOP1: select_top1(h),
                    Strategy.EMBED_RERANK: select_by_embedding(h, e_img, embedder.text),
                    Strategy.CONF_FUSION: select_by_confidence_fusion(h, e_img, embedder.text, config.alpha),
                    Strategy.SYNTH_RERANK: select_by_synth(h, e_img, data.phoc, embedder.channel,
                                                           embed_synth=embedder.synth),
                    Strategy.LEXICON_RERANK: select_with_lexicon(h, lexicon, e_img, embedder.text),
                }
            except NoEmbeddableHypothesis:
                top = select_top1(h)
                picks = dict.fromkeys(Strategy, top)
            for s, res in picks.items():
                correct[s] += res.prediction == truth
            fallbacks += picks[Strategy.LEXICON_RERANK].fallback
        n = len(labeled)
        for s in Strategy:
            rows.append({
                "strategy": s.value,
                "K": k,
                "alpha": config.alpha,
                "lexicon": data.lexicon_name if s is Strategy.LEXICON_RERANK else "none",
                "word_accuracy": correct[s] / n,
                "fallback_rate": fallbacks / n if s is Strategy.LEXICON_RERANK else 0.0,
            })
    largest = data.sets_for(max(data.hypotheses))
    pairs = [(largest[i], data.truths[i]) for i in labeled]
    topk = [
        {"K": k, "unconstrained": topk_accuracy(pairs, k), "lexicon": topk_accuracy(pairs, k, lexicon)}
        for k in config.K_values
    ]
    return rows, topk


def _ap_first(ids: tuple[str, ...], relevant: frozenset[str]) -> tuple[float, int]:
    hits, total, first = 0, 0.0, 0
    need = len(relevant)
    for rank, rid in enumerate(ids, 1):
        if rid in relevant:
            hits += 1
            total += hits / rank
            if first == 0:
                first = rank
            if hits == need:
                break
    return total / need, first


def retrieval_corpus(data: CorpusData, embedder: Embedder) -> Corpus:
    e_w = embedder.prep_store(data.e_w).matrix
    e_n = embedder.prep_store(data.e_n).matrix
    truths = [t if t is not None else "" for t in data.truths]
    return Corpus(
        WordRecord(rid, truth, noisy, e_w[i], e_n[i])
        for i, (rid, truth, noisy) in enumerate(zip(data.ids, truths, data.noisy_texts))
    )


def evaluate_retrieval(data: CorpusData, config: ExperimentConfig,
                       methods=RETRIEVAL_METHODS) -> tuple[list[dict], list[dict]]:
    """mAP and mean first-relevant rank per method; also per-query AP records."""
    embedder = Embedder(data.phoc, _channel_for(data, config), config.l2_normalize)
    corpus = retrieval_corpus(data, embedder)
    labeled_ids = {rid for rid, t in zip(data.ids, data.truths) if t}
    queries = [q for q in build_queries(corpus) if q.text]
    if not queries:
        raise CorpusError("no labeled records to build queries from")
    fused = {}
    if "avg_fusion" in methods:
        fused["avg_fusion"] = fuse_average(corpus)
    if "max_fusion" in methods:
        fused["max_fusion"] = fuse_max(corpus)

    def qbs_rankers(text):
        e_t = embedder.text(text)
        yield "edit_distance", lambda: rank_by_edit_distance(text, corpus)
        yield "qbs_recognizer", lambda: qbs_recognizer(e_t, corpus)
        yield "qbs_image", lambda: qbs_image(e_t, corpus)
        yield "naive_merge", lambda: naive_merge(text, e_t, corpus)
        yield "query_expansion", lambda: _query_expansion(text, e_t, corpus, embedder)
        for name, store in fused.items():
            yield name, lambda store=store: rank_by_distance(e_t, store)

    per_method: dict[str, list[tuple[float, int]]] = {m: [] for m in methods}
    dump = []
    for q in queries:
        for name, ranker in qbs_rankers(q.text):
            if name not in per_method:
                continue
            ap, first = _ap_first(ranker().ids, q.relevant_ids)
            per_method[name].append((ap, first))
            dump.append({"method": name, "query": q.text, "ap": ap, "first_relevant_rank": first})
    if "qbe" in methods:
        for q in build_example_queries(corpus):
            if q.example_id not in labeled_ids:
                continue
            ap, first = _ap_first(qbe_by_id(q.example_id, corpus).ids, q.relevant_ids)
            per_method["qbe"].append((ap, first))
            dump.append({"method": "qbe", "query": q.example_id, "ap": ap, "first_relevant_rank": first})
    rows = []
    for name in methods:
        vals = per_method[name]
        rows.append({
            "method": name,
            "Q": len(vals),
            "mAP": float(np.mean([v[0] for v in vals])),
            "mean_rank_of_first_relevant": float(np.mean([v[1] for v in vals])),
        })
    return rows, dump


def _query_expansion(text, e_t, corpus, embedder: Embedder):
    if not embedder.l2_normalize:
        return query_expansion(text, e_t, corpus, embedder.phoc, embedder.channel)
    # same procedure with the normalised synthetic query
    merged = naive_merge(text, e_t, corpus)
    if not (corpus._noisy_array == text).any():
        return merged
    seed_text = corpus.noisy_texts[corpus.image_store._index[merged.ids[0]]]
    return rank_by_distance(embedder.synth(seed_text), corpus.image_store)


# --- reports -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def write_csv(path: str | Path, columns, rows) -> None:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def write_jsonl(path: str | Path, records) -> None:
    with atomic_write(path) as fh:
        for r in records:
            fh.write(_dump(r) + "\n")


def read_csv(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


__all__ = [
    "CorpusData", "CorpusError", "generate", "write_corpus", "load_corpus", "load_files", "ingest",
    "evaluate_recognition", "evaluate_retrieval", "write_csv", "read_csv", "write_jsonl",
    "RECOGNITION_COLUMNS", "TOPK_COLUMNS", "RETRIEVAL_COLUMNS", "RETRIEVAL_METHODS",
    "Embedder", "build_channel", "build_noise", "PhocError",
]
