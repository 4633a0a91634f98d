"""Pure-numpy Kennard-Stone kernels; same contract as the compiled module."""

import numpy as np


def _sqdist_to(X, i):
    diff = X - X[i]
    return np.einsum("ij,ij->i", diff, diff)


def max_distance_pair(X):
    n = X.shape[0]
    best, bi, bj = -1.0, 0, 1
    for i in range(n - 1):
        dist = _sqdist_to(X[i:], 0)[1:]
        j = int(np.argmax(dist))
        if dist[j] > best:
            best, bi, bj = float(dist[j]), i, i + 1 + j
    return bi, bj


def maximin_select(X, first, second, n_select):
    order = np.empty(n_select, dtype=np.intp)
    order[0], order[1] = first, second
    taken = np.zeros(X.shape[0], dtype=bool)
    taken[[first, second]] = True
    mind = np.minimum(_sqdist_to(X, first), _sqdist_to(X, second))
    for step in range(2, n_select):
        masked = np.where(taken, -1.0, mind)
        pick = int(np.argmax(masked))
        order[step] = pick
        taken[pick] = True
        np.minimum(mind, _sqdist_to(X, pick), out=mind)
    return order
