import numpy as np
import pytest

from fusionspot.core import EmbeddingStore, RankedList, rank_by_distance
from fusionspot.phoc import PhocConfig
from fusionspot.retrieval import (
    Corpus,
    QuerySpec,
    WordRecord,
    average_precision,
    build_example_queries,
    build_queries,
    first_relevant_rank,
    fuse_average,
    fuse_max,
    mean_average_precision,
    naive_merge,
    qbe,
    qbe_by_id,
    qbs_image,
    qbs_recognizer,
    query_expansion,
    rank_by_edit_distance,
)
from fusionspot.simchannel import ImageChannel, image_embed, synth_embed, text_embed
from oracles import mean_average_precision_prefix

PHOC = PhocConfig("ab", (1, 2))


def rec(rid, truth, noisy, e_w, e_n=None):
    e_w = np.asarray(e_w, dtype=float)
    return WordRecord(rid, truth, noisy, e_w, e_w if e_n is None else np.asarray(e_n, dtype=float))


def noiseless_corpus(truths, noisy=None, channel=None):
    channel = channel or ImageChannel(np.eye(6))
    noisy = noisy or truths
    return Corpus(
        WordRecord(f"r{i}", t, n, image_embed(t, PHOC, channel, i),
                   text_embed(n, PHOC, channel))
        for i, (t, n) in enumerate(zip(truths, noisy))
    ), channel


def test_qbs_image_examples():
    c = Corpus([rec("only", "a", "a", [1, 0])])
    assert qbs_image(np.array([0.0, 0.0]), c).ids == ("only",)
    corpus, ch = noiseless_corpus(["aa", "ab"])
    assert qbs_image(text_embed("ab", PHOC, ch), corpus).ids[0] == "r1"
    dup = Corpus([rec("y", "a", "a", [1, 1]), rec("x", "a", "a", [1, 1])])
    assert qbs_image(np.zeros(2), dup).ids == ("x", "y")
    assert len(qbs_image(np.zeros(2), [])) == 0


def test_qbs_recognizer_examples():
    corpus, ch = noiseless_corpus(["aa", "ab", "ba"])
    q = text_embed("ab", PHOC, ch)
    assert qbs_recognizer(q, corpus) == qbs_image(q, corpus)
    same = Corpus([rec(r, "a", "a", [0, 0], [3, 3]) for r in ("c", "a", "b")])
    assert qbs_recognizer(np.zeros(2), same).ids == ("a", "b", "c")
    c = Corpus([rec("far1", "x", "x", [0, 0], [9, 9]), rec("hit", "x", "ab", [0, 0], [1, 1]),
                rec("far2", "x", "x", [0, 0], [8, 8])])
    assert qbs_recognizer(np.array([1.0, 1.0]), c).ids[0] == "hit"


def test_qbe_examples():
    corpus, ch = noiseless_corpus(["aa", "ab", "ba", "ab"])
    for r in corpus.records:
        lst = qbe_by_id(r.record_id, corpus)
        assert lst[0][1] == 0.0
    assert qbe_by_id("r1", corpus).ids[:2] == ("r1", "r3")
    assert len(qbe(np.zeros(6), [])) == 0
    with pytest.raises(KeyError):
        qbe_by_id("nope", corpus)


def test_qbe_self_first_with_noise():
    ch = ImageChannel.from_seed(6, seed=1, gap=0.5, sigma_img=0.2)
    truths = ["ab", "ab", "ba", "aab", "ab"]
    c = Corpus(WordRecord(f"r{i}", t, t, image_embed(t, PHOC, ch, i), text_embed(t, PHOC, ch))
               for i, t in enumerate(truths))
    for r in c.records:
        lst = qbe_by_id(r.record_id, c)
        assert lst.items[0] == (r.record_id, 0.0)


def test_edit_distance_examples():
    c = Corpus([rec("x", "t", "xy", [0]), rec("a", "t", "ab", [0]), rec("b", "t", "ac", [0])])
    r = rank_by_edit_distance("ab", c)
    assert r.items == [("a", 0.0), ("b", 1.0), ("x", 2.0)]
    same = Corpus([rec(i, "t", "q", [0]) for i in "cab"])
    assert rank_by_edit_distance("q", same).ids == ("a", "b", "c")
    lens = Corpus([rec("l3", "t", "abc", [0]), rec("l1", "t", "a", [0]), rec("l0", "t", "", [0])])
    assert rank_by_edit_distance("", lens).scores == (0.0, 1.0, 3.0)


def test_naive_merge_examples():
    corpus, ch = noiseless_corpus(["aa", "ab", "ba"], noisy=["aa", "bb", "ba"])
    q = text_embed("ab", PHOC, ch)
    assert naive_merge("ab", q, corpus) == qbs_image(q, corpus)
    allm, ch = noiseless_corpus(["aa", "ab"], noisy=["ab", "ab"])
    assert naive_merge("ab", q, allm).ids == qbs_image(q, allm).ids
    c = Corpus([rec("near", "ab", "aa", [0, 0]), rec("mid", "ab", "bb", [1, 0]),
                rec("far", "zz", "ab", [10, 10])])
    r = naive_merge("ab", np.zeros(2), c)
    assert r.ids == ("far", "near", "mid")
    assert list(r.scores) == sorted(r.scores)


def test_naive_merge_partition_exact():
    rng = np.random.default_rng(4)
    noisy = ["ab", "ba", "ab", "a", "ab", "b"]
    c = Corpus(rec(f"r{i}", "x", n, rng.normal(size=3)) for i, n in enumerate(noisy))
    r = naive_merge("ab", rng.normal(size=3), c)
    head = {x.record_id for x in c.records if x.noisy_text == "ab"}
    assert set(r.ids[: len(head)]) == head
    assert sorted(r.ids) == sorted(c.ids)


def test_query_expansion_fallback_and_noiseless():
    ch = ImageChannel.from_seed(6, seed=2, gap=0.6)
    truths = ["ab", "ba", "ab", "aab", "b"]
    c, _ = noiseless_corpus(truths, noisy=["ab", "ba", "aa", "aab", "b"], channel=ch)
    q = text_embed("ab", PHOC, ch)
    r = query_expansion("ab", q, c, PHOC, ch)
    assert set(r.ids[:2]) == {"r0", "r2"}
    assert query_expansion("bb", text_embed("bb", PHOC, ch), c, PHOC, ch) == naive_merge(
        "bb", text_embed("bb", PHOC, ch), c)


def test_query_expansion_follows_hallucinated_match():
    # the only record read as "ab" is really a "ba" image
    ch = ImageChannel.from_seed(6, seed=2, gap=0.6)
    recs = [
        WordRecord("true", "ab", "aa", image_embed("ab", PHOC, ch, 0), text_embed("aa", PHOC, ch)),
        WordRecord("wrong", "ba", "ab", image_embed("ba", PHOC, ch, 1), text_embed("ab", PHOC, ch)),
        WordRecord("other", "ba", "ba", image_embed("ba", PHOC, ch, 2), text_embed("ba", PHOC, ch)),
    ]
    c = Corpus(recs)
    r = query_expansion("ab", text_embed("ab", PHOC, ch), c, PHOC, ch)
    expected = rank_by_distance(synth_embed("ab", PHOC, ch), c.image_store)
    assert r == expected
    # the seed text "ab" synthesises to the true image exactly
    assert r.ids[0] == "true"


def test_fusions():
    c = Corpus([rec("a", "x", "x", [1, 0], [0, 1])])
    assert fuse_average(c).get("a").tolist() == [0.5, 0.5]
    assert fuse_max(c).get("a").tolist() == [1, 1]
    same = Corpus([rec("a", "x", "x", [2, 3])])
    assert fuse_average(same).get("a").tolist() == [2, 3]
    below = Corpus([rec("a", "x", "x", [2, 3], [1, -4])])
    assert fuse_max(below).get("a").tolist() == [2, 3]
    swapped = Corpus([rec("a", "x", "x", [0, 1], [1, 0])])
    assert np.array_equal(fuse_max(swapped).matrix, fuse_max(c).matrix)


def test_fuse_average_compositional():
    rng = np.random.default_rng(2)
    recs = [rec(f"r{i}", "x", "x", rng.normal(size=4), rng.normal(size=4)) for i in range(30)]
    q = rng.normal(size=4)
    pre = EmbeddingStore(tuple(r.record_id for r in recs), np.stack([(r.e_w + r.e_n) / 2 for r in recs]))
    assert rank_by_distance(q, fuse_average(recs)) == rank_by_distance(q, pre)


def test_zero_noise_lists_coincide():
    corpus, ch = noiseless_corpus(["ab", "ba", "aab", "ab", "b"])
    for w in ["ab", "ba", "b"]:
        q = text_embed(w, PHOC, ch)
        base = qbs_image(q, corpus)
        assert qbs_recognizer(q, corpus) == base
        assert rank_by_distance(q, fuse_average(corpus)) == base
        assert rank_by_distance(q, fuse_max(corpus)) == base


def test_average_precision_examples():
    lst = RankedList(("a", "b", "c"), (0, 1, 2))
    assert average_precision(lst, {"a", "c"}) == pytest.approx((1 + 2 / 3) / 2, abs=1e-15)
    assert average_precision(lst, {"a", "b"}) == 1.0
    assert average_precision(lst, {"c"}) == pytest.approx(1 / 3)
    assert first_relevant_rank(lst, {"c"}) == 3
    with pytest.raises(ValueError):
        average_precision(lst, set())


def test_map_examples():
    lst = RankedList(("a", "b"), (0, 1))
    q1 = QuerySpec(frozenset({"a"}), text="x")
    q2 = QuerySpec(frozenset({"b"}), text="y")
    assert mean_average_precision([(q1, lst)]) == 1.0
    assert mean_average_precision([(q1, lst), (q2, lst)]) == 0.75
    with pytest.raises(ValueError):
        mean_average_precision([])


def test_map_matches_prefix_oracle():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        ids = [f"d{i}" for i in range(n)]
        runs, pairs = [], []
        for _q in range(int(rng.integers(1, 6))):
            order = list(rng.permutation(ids))
            rel = set(rng.choice(ids, size=int(rng.integers(1, n + 1)), replace=False))
            runs.append((order, rel))
            pairs.append((QuerySpec(frozenset(rel), text="q"), RankedList(tuple(order), tuple(range(n)))))
        assert abs(mean_average_precision(pairs) - mean_average_precision_prefix(runs)) <= 1e-12


def test_query_spec_validation():
    with pytest.raises(ValueError):
        QuerySpec(frozenset({"a"}))
    with pytest.raises(ValueError):
        QuerySpec(frozenset({"a"}), text="x", example_id="a")


def test_query_builders():
    corpus, _ = noiseless_corpus(["ba", "ab", "ab"])
    qs = build_queries(corpus)
    assert [q.text for q in qs] == ["ab", "ba"]
    assert qs[0].relevant_ids == {"r1", "r2"}
    ex = build_example_queries(corpus)
    assert [q.example_id for q in ex] == ["r0", "r1", "r2"]
    assert ex[1].relevant_ids == {"r1", "r2"}


def test_every_ranker_returns_permutation():
    ch = ImageChannel.from_seed(6, seed=1, gap=0.4, sigma_img=0.2)
    truths = ["ab", "ba", "aab", "ab", "b", "bba"]
    noisy = ["ab", "b", "aab", "aa", "b", "ab"]
    c = Corpus(WordRecord(f"r{i}", t, n, image_embed(t, PHOC, ch, i), text_embed(n, PHOC, ch))
               for i, (t, n) in enumerate(zip(truths, noisy)))
    q = text_embed("ab", PHOC, ch)
    lists = [qbs_image(q, c), qbs_recognizer(q, c), qbe_by_id("r2", c), rank_by_edit_distance("ab", c),
             naive_merge("ab", q, c), query_expansion("ab", q, c, PHOC, ch),
             rank_by_distance(q, fuse_average(c)), rank_by_distance(q, fuse_max(c))]
    for lst in lists:
        assert sorted(lst.ids) == sorted(c.ids)
