"""Pure-Python implementations of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` and must stay bit-identical
to it: same random slot layout, same summation order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit unsigned integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def draw_key(seed: int, draw_index: int) -> int:
    return mix64((seed & MASK64) ^ mix64((draw_index * GOLDEN + 1) & MASK64))


def uniform(key: int, slot: int) -> float:
    return (mix64((key + slot * GOLDEN) & MASK64) >> 11) * _INV_2_53


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_many(query: str, candidates) -> np.ndarray:
    return np.array([levenshtein(query, c) for c in candidates], dtype=np.int64)


def sq_distances(matrix_t: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Squared distances from ``query`` to each column of ``matrix_t`` (dim x n).

    Summed dimension by dimension so the rounding matches the compiled loop.
    """
    dim, n = matrix_t.shape
    out = np.zeros(n, dtype=np.float64)
    for j in range(dim):
        diff = matrix_t[j] - query[j]
        out += diff * diff
    return out


def corrupt_one(word, alphabet, tables, p_sub, p_del, p_ins, p_swap, key):
    """One corruption draw. ``tables[i]`` = (candidates, cumulative weights).

    Slots per position i: 5i insert?, 5i+1 inserted char, 5i+2 delete/substitute,
    5i+3 substitute char, 5i+4 swap with the next character.
    """
    out = []
    na = len(alphabet)
    n = len(word)
    i = 0
    while i <= n:
        if p_ins > 0.0 and na and uniform(key, 5 * i) < p_ins:
            k = int(uniform(key, 5 * i + 1) * na)
            out.append(alphabet[min(k, na - 1)])
        if i == n:
            break
        if p_swap > 0.0 and i + 1 < n and uniform(key, 5 * i + 4) < p_swap:
            out.append(word[i + 1])
            out.append(word[i])
            i += 2
            continue
        u = uniform(key, 5 * i + 2)
        if u < p_del:
            i += 1
            continue
        ch = word[i]
        if u < p_del + p_sub:
            cands, cum = tables[i]
            if cands:
                v = uniform(key, 5 * i + 3)
                k = 0
                while k < len(cum) - 1 and cum[k] <= v:
                    k += 1
                ch = cands[k]
        out.append(ch)
        i += 1
    return "".join(out)


def draw_distinct(word, alphabet, tables, p_sub, p_del, p_ins, p_swap, seed, offset, k, attempts):
    """Draw corruptions until ``k`` distinct strings are seen or attempts run out.

    Returns the distinct strings in first-seen order.
    """
    seen = {}
    for j in range(attempts):
        s = corrupt_one(word, alphabet, tables, p_sub, p_del, p_ins, p_swap, draw_key(seed, offset + j))
        if s not in seen:
            seen[s] = None
            if len(seen) >= k:
                break
    return list(seen)
