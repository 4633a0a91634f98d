# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Kennard-Stone kernels.

Distances are computed on the fly, so memory stays O(N) instead of the
O(N^2) of a precomputed distance matrix.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _sqdist(const double[:, ::1] X, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0, diff
    for k in range(X.shape[1]):
        diff = X[i, k] - X[j, k]
        acc += diff * diff
    return acc


def max_distance_pair(const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], i, j
    cdef Py_ssize_t bi = 0, bj = 1
    cdef double best = -1.0, dist
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                dist = _sqdist(X, i, j)
                if dist > best:
                    best = dist
                    bi = i
                    bj = j
    return bi, bj


def maximin_select(const double[:, ::1] X, Py_ssize_t first, Py_ssize_t second,
                   Py_ssize_t n_select):
    cdef Py_ssize_t n = X.shape[0], step, i, pick
    cdef double best, dist
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mind_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] mind = mind_arr
    cdef cnp.ndarray[cnp.intp_t, ndim=1] order = np.empty(n_select, dtype=np.intp)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] taken_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] taken = taken_arr

    order[0] = first
    order[1] = second
    taken[first] = 1
    taken[second] = 1
    with nogil:
        for i in range(n):
            mind[i] = _sqdist(X, i, first)
            dist = _sqdist(X, i, second)
            if dist < mind[i]:
                mind[i] = dist
    for step in range(2, n_select):
        best = -1.0
        pick = -1
        with nogil:
            for i in range(n):
                if not taken[i] and mind[i] > best:
                    best = mind[i]
                    pick = i
            taken[pick] = 1
            for i in range(n):
                if not taken[i]:
                    dist = _sqdist(X, i, pick)
                    if dist < mind[i]:
                        mind[i] = dist
        order[step] = pick
    return order
