"""Matched-standards graph and the latent-space alignment penalty.

The graph has 2K nodes, ordered ``[primary standards; secondary standards]``,
with a single unit-weight edge joining the primary and secondary measurement
of each standard. For stacked standards ``S = [Xp; Xs]`` the penalty on a
projection direction ``w`` is ``w' S' L S w``, which collapses to
``||(Xp - Xs) w||^2`` for this graph. That identity lets the regularizer be
carried by the K x d difference matrix instead of a dense d x d matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InputError, ShapeError
from .numcore import as_matrix


@dataclass(frozen=True)
class StandardsPair:
    """Matched calibration standards; row i of both blocks is the same physical sample."""

    Xp: np.ndarray
    Xs: np.ndarray

    def __post_init__(self):
        Xp = as_matrix(self.Xp, "Xp")
        Xs = as_matrix(self.Xs, "Xs")
        if Xp.shape != Xs.shape:
            raise ShapeError(f"standards shapes differ: {Xp.shape} vs {Xs.shape}")
        object.__setattr__(self, "Xp", Xp)
        object.__setattr__(self, "Xs", Xs)

    @property
    def n_standards(self) -> int:
        return self.Xp.shape[0]

    @property
    def n_channels(self) -> int:
        return self.Xp.shape[1]

    def stacked(self) -> np.ndarray:
        return np.vstack([self.Xp, self.Xs])

    def centered(self) -> "StandardsPair":
        """Each block centered on its own column means."""
        return StandardsPair(self.Xp - self.Xp.mean(axis=0), self.Xs - self.Xs.mean(axis=0))


@dataclass(frozen=True)
class GraphMatrices:
    A: np.ndarray
    D: np.ndarray
    L: np.ndarray


def build_graph(n_standards: int) -> GraphMatrices:
    """Adjacency, degree and Laplacian of the matched-pairs graph on 2K nodes."""
    if int(n_standards) != n_standards or n_standards < 1:
        raise InputError(f"need at least one standard, got {n_standards!r}")
    eye = np.eye(int(n_standards))
    A = np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), eye)
    D = np.diag(A.sum(axis=1))
    return GraphMatrices(A=A, D=D, L=D - A)


class Regularizer:
    """The d x d penalty matrix ``S' L S``, stored through its rank-K factor.

    ``matvec`` and ``value`` use the factor ``Xp - Xs``; ``dense`` builds the
    full matrix from the stacked standards and the graph Laplacian, which is
    only worth doing for small d or in tests.
    """

    def __init__(self, standards: StandardsPair):
        self.standards = standards
        self.difference = standards.Xp - standards.Xs

    @property
    def n_channels(self) -> int:
        return self.difference.shape[1]

    @property
    def rank_bound(self) -> int:
        return self.difference.shape[0]

    @cached_property
    def dense(self) -> np.ndarray:
        S = self.standards.stacked()
        L = build_graph(self.standards.n_standards).L
        G = S.T @ L @ S
        return 0.5 * (G + G.T)

    def factored(self) -> np.ndarray:
        return self.difference.T @ self.difference

    def matvec(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        self._check(w)
        return self.difference.T @ (self.difference @ w)

    def value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        self._check(w)
        r = self.difference @ w
        return float(r @ r)

    def _check(self, w: np.ndarray) -> None:
        if w.shape[0] != self.n_channels:
            raise ShapeError(f"w has length {w.shape[0]}, expected {self.n_channels}")


def regularizer(standards: StandardsPair) -> Regularizer:
    return Regularizer(standards)


def regularizer_value(w, reg: Regularizer) -> float:
    """Sum over standards of the squared primary/secondary score difference along ``w``."""
    return reg.value(w)
