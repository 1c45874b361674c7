# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Fused exact top-k dot-product selection.

Scores one float32 matrix row at a time (accumulating in float64) and keeps
the best k candidates in a small insertion buffer, so no n-sized score array
is ever materialized. Ordering matches the numpy fallback exactly:
score descending, then tie rank ascending.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def topk_dot(const float[:, ::1] matrix,
             const double[::1] query,
             const long long[::1] ranks,
             Py_ssize_t k):
    """Return (indices, scores) of the top-k rows by dot product with query.

    ``ranks[i]`` breaks score ties: lower rank wins. k is clamped to the row
    count; indices are row numbers into ``matrix``.
    """
    cdef Py_ssize_t n = matrix.shape[0]
    cdef Py_ssize_t d = matrix.shape[1]
    if query.shape[0] != d:
        raise ValueError("query dimension does not match matrix")
    if ranks.shape[0] != n:
        raise ValueError("ranks length does not match matrix rows")
    if k < 1:
        raise ValueError("k must be >= 1")

    cdef Py_ssize_t m = k if k < n else n
    best_idx = np.empty(m, dtype=np.int64)
    best_score = np.empty(m, dtype=np.float64)
    best_rank = np.empty(m, dtype=np.int64)
    cdef long long[::1] bi = best_idx
    cdef double[::1] bs = best_score
    cdef long long[::1] br = best_rank

    cdef Py_ssize_t i, j, pos
    cdef Py_ssize_t count = 0
    cdef double s
    cdef long long r

    for i in range(n):
        s = 0.0
        for j in range(d):
            s += <double> matrix[i, j] * query[j]
        r = ranks[i]

        if count == m:
            # Not better than the current worst: skip.
            if s < bs[m - 1] or (s == bs[m - 1] and r >= br[m - 1]):
                continue
            pos = m - 1
        else:
            pos = count
            count += 1

        # Shift worse entries down and insert.
        while pos > 0 and (s > bs[pos - 1] or (s == bs[pos - 1] and r < br[pos - 1])):
            bs[pos] = bs[pos - 1]
            br[pos] = br[pos - 1]
            bi[pos] = bi[pos - 1]
            pos -= 1
        bs[pos] = s
        br[pos] = r
        bi[pos] = i

    return best_idx[:count], best_score[:count]
