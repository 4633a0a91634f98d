"""Reference methods: plain NIPALS PLS1 and global direct standardization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, RankExhaustedError, ShapeError
from .gctpls import FitConfig, LatentModel, fit
from .graphreg import StandardsPair
from .numcore import CenteringInfo, as_matrix, as_vector, effective_rank, pseudo_inverse


@dataclass(frozen=True)
class TransferMap:
    """d x d map taking primary-instrument spectra onto the secondary response."""

    F: np.ndarray
    source_label: str = "primary"
    target_label: str = "secondary"
    rank: int = 0


def direct_standardization(standards: StandardsPair, source_label: str = "primary",
                           target_label: str = "secondary") -> TransferMap:
    """``F = pinv(Xp) Xs``."""
    F = pseudo_inverse(standards.Xp) @ standards.Xs
    return TransferMap(F=F, source_label=source_label, target_label=target_label,
                       rank=effective_rank(standards.Xp))


def apply_transfer(tmap: TransferMap, X) -> np.ndarray:
    X = as_matrix(X)
    if X.shape[1] != tmap.F.shape[0]:
        raise ShapeError(f"X has {X.shape[1]} channels, transfer map expects {tmap.F.shape[0]}")
    return X @ tmap.F


def fit_pls(X0, y0, n_components: int) -> LatentModel:
    """Ordinary PLS1: GCT-PLS with the alignment penalty switched off."""
    return fit(X0, y0, None, FitConfig(gamma=0.0, n_components=n_components))


def fit_pls_reference(X0, y0, n_components: int) -> LatentModel:
    """Textbook NIPALS PLS1, kept independent of :func:`gctpls.fit`.

    Both X and y are deflated here (the usual textbook form); the resulting
    weights, scores and predictions are the same as with y left intact.
    """
    X = as_matrix(X0)
    y = as_vector(y0)
    if X.shape[0] != y.shape[0]:
        raise ShapeError("X and y disagree in sample count")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    X = X - x_mean
    f = y - y_mean
    if not np.any(f):
        raise DegenerateInputError("response is constant")
    x_scale = np.linalg.norm(X)

    W, P, c = [], [], []
    for a in range(n_components):
        w = X.T @ f
        w /= np.linalg.norm(w)
        if w[np.argmax(np.abs(w))] < 0:
            w = -w
        t = X @ w
        tt = t @ t
        if np.sqrt(tt) <= 1e-10 * x_scale:
            raise RankExhaustedError(a + 1)
        p = X.T @ t / tt
        q = f @ t / tt
        X = X - np.outer(t, p)
        f = f - q * t
        W.append(w)
        P.append(p)
        c.append(q)

    W = np.column_stack(W)
    P = np.column_stack(P)
    c = np.array(c)
    return LatentModel(
        W=W,
        P=P,
        c_vec=c,
        b=W @ np.linalg.solve(P.T @ W, c),
        centering=CenteringInfo(x_mean, y_mean),
        config=FitConfig(gamma=0.0, n_components=n_components),
    )
