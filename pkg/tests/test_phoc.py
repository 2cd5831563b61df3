import itertools
import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fusionspot.phoc import PhocConfig, PhocError, phoc_dim, phoc_embed
from oracles import phoc_intervals


def test_examples():
    assert phoc_embed("ab", PhocConfig("ab", (1,))).tolist() == [1, 1]
    assert phoc_embed("ab", PhocConfig("ab", (1, 2))).tolist() == [1, 1, 1, 0, 0, 1]
    assert phoc_embed("aa", PhocConfig("ab", (1,))).tolist() == [1, 0]


def test_dim_examples():
    assert phoc_dim(PhocConfig("ab", (1,))) == 2
    assert phoc_dim(PhocConfig("ab", (1, 2))) == 6
    assert phoc_dim(PhocConfig("abcdefghijklmnopqrstuvwxyz0123456789", (2, 3, 4, 5))) == 504


def test_boundary_tie_counts():
    # 3 chars at level 2: the middle char is split exactly in half, so it lands in both regions
    v = phoc_embed("abc", PhocConfig("abc", (2,))).reshape(2, 3)
    assert v.tolist() == [[1, 1, 0], [0, 1, 1]]


def test_errors():
    cfg = PhocConfig("ab", (1,))
    with pytest.raises(PhocError):
        phoc_embed("", cfg)
    with pytest.raises(PhocError, match="U\\+0063"):
        phoc_embed("abc", cfg)
    for bad in [("", (1,)), ("aa", (1,)), ("ab", ()), ("ab", (2, 1)), ("ab", (0, 1))]:
        with pytest.raises(PhocError):
            PhocConfig(*bad)


def test_config_json_roundtrip(tmp_path):
    cfg = PhocConfig("का", (1, 3))
    assert PhocConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg
    cfg.save(tmp_path / "p.json")
    assert PhocConfig.load(tmp_path / "p.json") == cfg


def test_from_corpus_scans_code_points():
    assert PhocConfig.from_corpus(["ba", "c"]).alphabet == "abc"


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abcde", min_size=1, max_size=20))
def test_binary_and_sized(text):
    cfg = PhocConfig("abcde")
    v = phoc_embed(text, cfg)
    assert v.shape == (phoc_dim(cfg),)
    assert set(np.unique(v)) <= {0.0, 1.0}
    assert not v.flags.writeable


def test_anagrams():
    multi = PhocConfig("abc", (1, 2, 3))
    single = PhocConfig("abc", (1,))
    assert not np.array_equal(phoc_embed("ab", multi), phoc_embed("ba", multi))
    for w in ["abc", "aab", "cab"]:
        perms = {"".join(p) for p in itertools.permutations(w)}
        vecs = [phoc_embed(p, single) for p in perms]
        assert all(np.array_equal(vecs[0], v) for v in vecs)


def test_interval_oracle_500_strings():
    alphabet = "0123456789"
    rng = random.Random(5)
    cfg = PhocConfig(alphabet, (1, 2, 3, 4, 5))
    odd = PhocConfig(alphabet, (2, 3, 7))
    for _ in range(500):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 17)))
        for c in (cfg, odd):
            assert phoc_embed(s, c).astype(int).tolist() == phoc_intervals(s, alphabet, c.levels)
