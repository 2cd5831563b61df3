import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fusionspot import kernels
from fusionspot.core import (
    DimensionMismatch,
    EmbeddingStore,
    RankedList,
    StoreFormatError,
    euclidean_distance,
    levenshtein,
    load_store,
    make_embedding,
    nfc,
    rank_by_distance,
    save_store,
)
from oracles import levenshtein_matrix


def store(**vecs):
    return EmbeddingStore.from_pairs(list(vecs.items()))


def test_euclidean_examples():
    assert euclidean_distance([0, 0], [0, 0]) == 0.0
    assert euclidean_distance([1, 0], [0, 1]) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert euclidean_distance([1, 2, 3], [4, 6, 3]) == 5.0


def test_euclidean_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        euclidean_distance([1, 2], [1, 2, 3])


def test_euclidean_symmetric_and_triangle():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b, c = rng.normal(size=(3, 7))
        ab, ba = euclidean_distance(a, b), euclidean_distance(b, a)
        assert ab == ba
        assert ab <= euclidean_distance(a, c) + euclidean_distance(c, b) + 1e-9


def test_make_embedding_rejects_non_finite():
    with pytest.raises(ValueError):
        make_embedding([1.0, float("nan")])
    with pytest.raises(ValueError):
        make_embedding([])
    e = make_embedding([1, 2])
    assert not e.flags.writeable


def test_rank_examples():
    r = rank_by_distance(np.array([0.0, 0.0]), store(a=[1, 0], b=[0, 0]))
    assert r.items == [("b", 0.0), ("a", 1.0)]
    r = rank_by_distance(np.array([1.0, 1.0]), store(y=[1, 1], x=[1, 1]))
    assert r.items == [("x", 0.0), ("y", 0.0)]
    r = rank_by_distance(np.array([0.5, 0.5]), store(r=[1, 1], q=[0, 1], p=[1, 0]))
    assert r.ids == ("p", "q", "r")
    assert r.scores == pytest.approx([math.sqrt(0.5)] * 3)


def test_rank_empty_store_and_mismatch():
    empty = EmbeddingStore.from_pairs([])
    assert len(rank_by_distance(np.array([1.0]), empty)) == 0
    with pytest.raises(DimensionMismatch):
        rank_by_distance(np.array([1.0]), store(a=[1, 2]))


def test_store_invariants():
    with pytest.raises(ValueError):
        EmbeddingStore(("a", "a"), np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        EmbeddingStore.from_pairs([("a", [1, 2]), ("b", [1])])
    with pytest.raises(ValueError):
        EmbeddingStore(("a",), np.array([[np.inf]]))


def test_rank_is_permutation_and_prefix_stable():
    rng = np.random.default_rng(7)
    ids = [f"r{i}" for i in range(60)]
    mat = rng.integers(0, 3, size=(60, 4)).astype(float)  # many ties
    full = EmbeddingStore(tuple(ids), mat)
    q = rng.integers(0, 3, size=4).astype(float)
    ranked = rank_by_distance(q, full)
    assert sorted(ranked.ids) == sorted(ids)
    assert list(ranked.scores) == sorted(ranked.scores)
    keep = sorted(rng.choice(60, size=25, replace=False))
    sub = EmbeddingStore(tuple(ids[i] for i in keep), mat[keep])
    kept = set(sub.ids)
    assert rank_by_distance(q, sub).ids == tuple(i for i in ranked.ids if i in kept)


def test_ranked_list_from_scores():
    r = RankedList.from_scores(["b", "a", "c"], [1.0, 1.0, 0.5])
    assert r.ids == ("c", "a", "b")
    assert r[0] == ("c", 0.5)


def test_levenshtein_examples():
    assert levenshtein("abc", "abc") == 0
    assert levenshtein("", "abc") == 3
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("", "") == 0


def test_levenshtein_nfc():
    # precomposed vs decomposed e-acute are one code point after NFC
    assert levenshtein("é", "é") == 0
    assert nfc("é") == "é"


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=12), st.text(max_size=12))
def test_levenshtein_metric(a, b):
    d = levenshtein(a, b)
    assert d == levenshtein(b, a)
    assert d <= max(len(nfc(a)), len(nfc(b)))
    assert (d == 0) == (nfc(a) == nfc(b))


def test_levenshtein_oracle_random_unicode():
    rng = random.Random(11)
    pool = "abcकखािेé\U0001F600"
    for _ in range(1000):
        a = "".join(rng.choice(pool) for _ in range(rng.randint(0, 10)))
        b = "".join(rng.choice(pool) for _ in range(rng.randint(0, 10)))
        assert kernels.levenshtein(a, b) == levenshtein_matrix(a, b)


def test_store_roundtrip(tmp_path):
    s = store(a=[1.5, -2.0], b=[0.1, 1e-300])
    p = tmp_path / "s.jsonl"
    save_store(s, p)
    back = load_store(p)
    assert back.ids == s.ids
    assert np.array_equal(back.matrix, s.matrix)


def test_store_short_vector_names_line(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"id": "a", "vec": [1, 2]}\n{"id": "b", "vec": [1, 2]}\n{"id": "c", "vec": [1]}\n')
    with pytest.raises(StoreFormatError, match=":3:"):
        load_store(p)


def test_store_duplicate_and_malformed(tmp_path):
    p = tmp_path / "dup.jsonl"
    p.write_text('{"id": "a", "vec": [1]}\n{"id": "a", "vec": [2]}\n')
    with pytest.raises(StoreFormatError, match="duplicate"):
        load_store(p)
    p.write_text('{"id": "a", "vec": [1]}\nnot json\n')
    with pytest.raises(StoreFormatError, match=":2:"):
        load_store(p)
