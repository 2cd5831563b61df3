"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from fusionspot import _purepy
from fusionspot.corpus import VocabularySpec, generate_vocabulary
from fusionspot.simchannel import NoiseModel

try:
    from fusionspot import _kernels
except ImportError:
    _kernels = None


def workloads(rng):
    spec = VocabularySpec(size=2000)
    vocab = generate_vocabulary(spec, rng)
    noise = NoiseModel(0.011, 0.003, 0.003, seed=1, alphabet=spec.alphabet)
    words = vocab[:200]
    tables = [[noise.substitution_table(c) for c in w] for w in words]
    mt = np.ascontiguousarray(rng.normal(size=(585, 5000)))
    q = rng.normal(size=585)

    def lev(mod):
        for w in vocab[:20]:
            mod.levenshtein_many(w, vocab)

    def dist(mod):
        for _ in range(5):
            mod.sq_distances(mt, q)

    def hyps(mod):
        for i, (w, t) in enumerate(zip(words, tables)):
            mod.draw_distinct(w, noise.alphabet, t, noise.p_sub, noise.p_del, noise.p_ins, 0.0,
                              noise.seed, i << 20, 16, 800)

    return {
        "levenshtein_many (20 x 2000 words)": lev,
        "sq_distances (5 x 5000 x 585)": dist,
        "draw_distinct (200 words, K=16)": hyps,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    jobs = workloads(np.random.default_rng(0))
    print(f"{'kernel':38s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    for name, fn in jobs.items():
        py = min(timeit.repeat(lambda: fn(_purepy), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:38s} {py:10.4f} {'n/a':>11s} {'n/a':>8s}")
            continue
        cc = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        print(f"{name:38s} {py:10.4f} {cc:11.4f} {py / cc:7.1f}x")


if __name__ == "__main__":
    main()
