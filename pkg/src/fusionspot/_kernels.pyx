# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Bit-identical twins of ``fusionspot._purepy``."""

from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free

import numpy as np

cdef extern from "Python.h":
    object PyUnicode_FromKindAndData(int kind, const void *buffer, Py_ssize_t size)
    int PyUnicode_4BYTE_KIND

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _key(uint64_t seed, uint64_t draw) nogil:
    return _mix(seed ^ _mix(draw * GOLDEN + 1))


cdef inline double _uniform(uint64_t key, uint64_t slot) nogil:
    return (_mix(key + slot * GOLDEN) >> 11) * INV_2_53


def mix64(z):
    return _mix(<uint64_t>(z & 0xFFFFFFFFFFFFFFFF))


def draw_key(seed, draw_index):
    return _key(<uint64_t>(seed & 0xFFFFFFFFFFFFFFFF), <uint64_t>(draw_index & 0xFFFFFFFFFFFFFFFF))


def uniform(key, slot):
    return _uniform(<uint64_t>(key & 0xFFFFFFFFFFFFFFFF), <uint64_t>(slot & 0xFFFFFFFFFFFFFFFF))


cdef Py_ssize_t _lev(Py_UCS4 *a, Py_ssize_t na, Py_UCS4 *b, Py_ssize_t nb, Py_ssize_t *row) nogil:
    cdef Py_ssize_t i, j, diag, up, best
    if na == 0:
        return nb
    if nb == 0:
        return na
    for j in range(nb + 1):
        row[j] = j
    for i in range(1, na + 1):
        diag = row[0]
        row[0] = i
        for j in range(1, nb + 1):
            up = row[j]
            best = diag + (a[i - 1] != b[j - 1])
            if up + 1 < best:
                best = up + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            row[j] = best
            diag = up
    return row[nb]


cdef Py_UCS4 *_ucs4(str s, Py_ssize_t *n) except NULL:
    cdef Py_ssize_t i, m = len(s)
    cdef Py_UCS4 *buf = <Py_UCS4 *>malloc((m + 1) * sizeof(Py_UCS4))
    if buf == NULL:
        raise MemoryError()
    for i in range(m):
        buf[i] = s[i]
    n[0] = m
    return buf


def levenshtein(str a, str b):
    cdef Py_ssize_t na, nb, out
    cdef Py_UCS4 *ba
    cdef Py_UCS4 *bb
    cdef Py_ssize_t *row
    if len(a) < len(b):
        a, b = b, a
    ba = _ucs4(a, &na)
    bb = _ucs4(b, &nb)
    row = <Py_ssize_t *>malloc((nb + 1) * sizeof(Py_ssize_t))
    try:
        out = _lev(ba, na, bb, nb, row)
    finally:
        free(ba)
        free(bb)
        free(row)
    return out


def levenshtein_many(str query, candidates):
    cdef list cands = list(candidates)
    cdef Py_ssize_t n = len(cands), i, nq, nc, longest = len(query)
    cdef Py_UCS4 *bq
    cdef Py_UCS4 *bc
    cdef Py_ssize_t *row
    cdef long long[::1] out_view
    out = np.empty(n, dtype=np.int64)
    out_view = out
    for c in cands:
        if len(<str>c) > longest:
            longest = len(<str>c)
    bq = _ucs4(query, &nq)
    row = <Py_ssize_t *>malloc((longest + 1) * sizeof(Py_ssize_t))
    try:
        for i in range(n):
            bc = _ucs4(<str>cands[i], &nc)
            if nc > nq:
                out_view[i] = _lev(bc, nc, bq, nq, row)
            else:
                out_view[i] = _lev(bq, nq, bc, nc, row)
            free(bc)
    finally:
        free(bq)
        free(row)
    return out


def sq_distances(const double[:, ::1] matrix_t, const double[::1] query):
    """Squared distances from ``query`` to each column of ``matrix_t`` (dim x n)."""
    cdef Py_ssize_t dim = matrix_t.shape[0], n = matrix_t.shape[1], i, j
    cdef double diff, q
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] acc = out
    with nogil:
        for j in range(dim):
            q = query[j]
            for i in range(n):
                diff = matrix_t[j, i] - q
                acc[i] = acc[i] + diff * diff
    return out


cdef class _Tables:
    cdef Py_UCS4 *cands
    cdef double *cum
    cdef Py_ssize_t *start
    cdef Py_ssize_t *count

    def __cinit__(self, list tables):
        cdef Py_ssize_t n = len(tables), total = 0, i, k, pos = 0
        for t in tables:
            total += len(t[0])
        self.cands = <Py_UCS4 *>malloc((total + 1) * sizeof(Py_UCS4))
        self.cum = <double *>malloc((total + 1) * sizeof(double))
        self.start = <Py_ssize_t *>malloc((n + 1) * sizeof(Py_ssize_t))
        self.count = <Py_ssize_t *>malloc((n + 1) * sizeof(Py_ssize_t))
        if not (self.cands and self.cum and self.start and self.count):
            raise MemoryError()
        for i in range(n):
            cands, cum = tables[i]
            self.start[i] = pos
            self.count[i] = len(cands)
            for k in range(len(cands)):
                self.cands[pos] = (<str>cands)[k]
                self.cum[pos] = cum[k]
                pos += 1

    def __dealloc__(self):
        free(self.cands)
        free(self.cum)
        free(self.start)
        free(self.count)


cdef Py_ssize_t _corrupt(Py_UCS4 *word, Py_ssize_t n, Py_UCS4 *alpha, Py_ssize_t na,
                         _Tables tab, double p_sub, double p_del, double p_ins, double p_swap,
                         uint64_t key, Py_UCS4 *out) nogil:
    cdef Py_ssize_t i = 0, k, m = 0, s, c
    cdef double u, v
    while i <= n:
        if p_ins > 0.0 and na > 0 and _uniform(key, 5 * i) < p_ins:
            k = <Py_ssize_t>(_uniform(key, 5 * i + 1) * na)
            if k > na - 1:
                k = na - 1
            out[m] = alpha[k]
            m += 1
        if i == n:
            break
        if p_swap > 0.0 and i + 1 < n and _uniform(key, 5 * i + 4) < p_swap:
            out[m] = word[i + 1]
            out[m + 1] = word[i]
            m += 2
            i += 2
            continue
        u = _uniform(key, 5 * i + 2)
        if u < p_del:
            i += 1
            continue
        if u < p_del + p_sub:
            c = tab.count[i]
            if c > 0:
                s = tab.start[i]
                v = _uniform(key, 5 * i + 3)
                k = 0
                while k < c - 1 and tab.cum[s + k] <= v:
                    k += 1
                out[m] = tab.cands[s + k]
                m += 1
                i += 1
                continue
        out[m] = word[i]
        m += 1
        i += 1
    return m


def corrupt_one(str word, str alphabet, list tables, double p_sub, double p_del, double p_ins,
                double p_swap, key):
    cdef Py_ssize_t n, na, m
    cdef Py_UCS4 *bw = _ucs4(word, &n)
    cdef Py_UCS4 *ba = _ucs4(alphabet, &na)
    cdef Py_UCS4 *out = <Py_UCS4 *>malloc((2 * n + 2) * sizeof(Py_UCS4))
    cdef _Tables tab = _Tables(tables)
    try:
        m = _corrupt(bw, n, ba, na, tab, p_sub, p_del, p_ins, p_swap,
                     <uint64_t>(key & 0xFFFFFFFFFFFFFFFF), out)
        return PyUnicode_FromKindAndData(PyUnicode_4BYTE_KIND, out, m)
    finally:
        free(bw)
        free(ba)
        free(out)


def draw_distinct(str word, str alphabet, list tables, double p_sub, double p_del, double p_ins,
                  double p_swap, seed, offset, Py_ssize_t k, Py_ssize_t attempts):
    cdef Py_ssize_t n, na, m, j
    cdef uint64_t useed = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t uoff = <uint64_t>(offset & 0xFFFFFFFFFFFFFFFF)
    cdef Py_UCS4 *bw = _ucs4(word, &n)
    cdef Py_UCS4 *ba = _ucs4(alphabet, &na)
    cdef Py_UCS4 *out = <Py_UCS4 *>malloc((2 * n + 2) * sizeof(Py_UCS4))
    cdef _Tables tab = _Tables(tables)
    cdef dict seen = {}
    try:
        for j in range(attempts):
            m = _corrupt(bw, n, ba, na, tab, p_sub, p_del, p_ins, p_swap, _key(useed, uoff + j), out)
            s = PyUnicode_FromKindAndData(PyUnicode_4BYTE_KIND, out, m)
            if s not in seen:
                seen[s] = None
                if len(seen) >= k:
                    break
    finally:
        free(bw)
        free(ba)
        free(out)
    return list(seen)
