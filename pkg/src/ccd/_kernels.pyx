# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot per-step loops.

conformal_pvalues ranks each score against everything seen so far with a
Fenwick tree over the compressed value ranks (O(n log n) total), instead of
the sorted-insert list the pure-Python fallback uses; both produce the same
integer counts, hence bit-identical p-values.
"""
import numpy as np

from libc.stdint cimport int64_t


def conformal_pvalues(object scores_in, object taus_in):
    scores = np.ascontiguousarray(scores_in, dtype=np.float64)
    taus = np.ascontiguousarray(taus_in, dtype=np.float64)
    cdef Py_ssize_t n = scores.shape[0]
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out

    uniq, inverse = np.unique(scores, return_inverse=True)
    rank_arr = np.ascontiguousarray(inverse, dtype=np.int64)
    cdef Py_ssize_t n_unique = uniq.shape[0]
    tree_arr = np.zeros(n_unique + 1, dtype=np.int64)

    cdef int64_t[::1] rank = rank_arr
    cdef int64_t[::1] tree = tree_arr
    cdef double[::1] tau = taus
    cdef double[::1] pv = out
    cdef Py_ssize_t i
    cdef int64_t r, j, le, lt, gt, eq

    for i in range(n):
        r = rank[i] + 1
        j = r
        while j <= n_unique:
            tree[j] += 1
            j += j & (-j)
        le = 0
        j = r
        while j > 0:
            le += tree[j]
            j -= j & (-j)
        lt = 0
        j = r - 1
        while j > 0:
            lt += tree[j]
            j -= j & (-j)
        eq = le - lt
        gt = (i + 1) - le
        pv[i] = (gt + tau[i] * eq) / (i + 1)

    return out


def cusum_alarms(object log_path_in, double log_c):
    lp = np.ascontiguousarray(log_path_in, dtype=np.float64)
    cdef double[::1] v = lp
    cdef Py_ssize_t n = v.shape[0]
    alarms = []
    cdef double log_min = v[0]
    cdef Py_ssize_t i
    for i in range(1, n):
        if v[i] - log_min >= log_c:
            alarms.append(i)
            log_min = v[i]
        elif v[i] < log_min:
            log_min = v[i]
    return np.asarray(alarms, dtype=np.int64)
