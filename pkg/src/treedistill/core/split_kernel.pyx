# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled best-split scan over one sorted feature column.

Must stay numerically identical to ``split_py.best_split_column``: both
compute the split score as ssl/nl + ssr/nr from exact integer-valued
class-count sums of squares, so the two backends pick the same split
bit-for-bit.
"""

from libc.math cimport INFINITY
from libc.stdlib cimport calloc, free


def best_split_column(const double[::1] values, const long long[::1] labels,
                      Py_ssize_t n_classes, Py_ssize_t min_leaf):
    """Scan a feature column sorted ascending for the best binary split.

    ``values`` and ``labels`` are aligned and sorted by value. Returns
    ``(score, threshold, pos)`` for the score-maximizing split position
    (ties resolved to the smallest threshold), or ``None`` when no
    position satisfies ``min_leaf`` on both sides between distinct
    values. ``score`` is sum_c(left_c^2)/n_left + sum_c(right_c^2)/n_right,
    a monotone equivalent of negative weighted Gini impurity.
    """
    cdef Py_ssize_t n = values.shape[0]
    if n < 2:
        return None

    cdef long long *left = <long long *> calloc(n_classes, sizeof(long long))
    cdef long long *right = <long long *> calloc(n_classes, sizeof(long long))
    if left == NULL or right == NULL:
        free(left)
        free(right)
        raise MemoryError()

    cdef double ssl = 0.0
    cdef double ssr = 0.0
    cdef double proxy, best_proxy = -INFINITY
    cdef Py_ssize_t i, c, nl, nr
    cdef Py_ssize_t best_i = -1

    try:
        for i in range(n):
            right[labels[i]] += 1
        for c in range(n_classes):
            ssr += <double> (right[c] * right[c])

        for i in range(n - 1):
            c = labels[i]
            # counts stay exact: increments are integers well below 2**53
            ssl += <double> (2 * left[c] + 1)
            left[c] += 1
            ssr -= <double> (2 * right[c] - 1)
            right[c] -= 1
            if values[i] == values[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            proxy = ssl / <double> nl + ssr / <double> nr
            if proxy > best_proxy:
                best_proxy = proxy
                best_i = i
    finally:
        free(left)
        free(right)

    if best_i < 0:
        return None
    return best_proxy, (values[best_i] + values[best_i + 1]) / 2.0, best_i
