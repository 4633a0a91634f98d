"""Dense numeric primitives shared by the modelling modules.

Functions take plain array-likes (or :class:`SpectraMatrix`) and return
``numpy`` arrays. Responses are 1-D float arrays throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DegenerateInputError, InputError, ShapeError, SingularityError

PINV_RCOND = 1e-10


@dataclass(frozen=True)
class SpectraMatrix:
    """N x d block of spectra with optional wavelength axis and sample ids."""

    values: np.ndarray
    wavelengths: np.ndarray | None = None
    sample_ids: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[np.newaxis, :]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ShapeError(f"spectra must be a non-empty 2-D matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InputError("spectra contain non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        if self.wavelengths is not None:
            wl = np.array(self.wavelengths, dtype=float, copy=True).ravel()
            if wl.shape[0] != values.shape[1]:
                raise ShapeError(
                    f"{wl.shape[0]} wavelengths for {values.shape[1]} spectral channels"
                )
            if wl.size > 1 and not np.all(np.diff(wl) > 0):
                raise InputError("wavelengths must be strictly increasing")
            wl.setflags(write=False)
            object.__setattr__(self, "wavelengths", wl)

        if self.sample_ids is not None:
            ids = tuple(str(s) for s in self.sample_ids)
            if len(ids) != values.shape[0]:
                raise ShapeError(f"{len(ids)} sample ids for {values.shape[0]} spectra")
            object.__setattr__(self, "sample_ids", ids)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def take(self, indices) -> "SpectraMatrix":
        """Row subset, keeping wavelengths and the matching sample ids."""
        idx = np.asarray(indices, dtype=int)
        ids = None if self.sample_ids is None else tuple(self.sample_ids[i] for i in idx)
        return SpectraMatrix(self.values[idx], self.wavelengths, ids)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class CenteringInfo:
    """Column means of the calibration spectra and the response mean."""

    x_mean: np.ndarray
    y_mean: float

    def __post_init__(self):
        x_mean = np.array(self.x_mean, dtype=float).ravel()
        if not (np.all(np.isfinite(x_mean)) and np.isfinite(self.y_mean)):
            raise InputError("centering means must be finite")
        object.__setattr__(self, "x_mean", x_mean)
        object.__setattr__(self, "y_mean", float(self.y_mean))


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-D float array (a single spectrum becomes one row)."""
    if isinstance(X, SpectraMatrix):
        return np.array(X.values)
    arr = np.array(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def as_vector(y, name: str = "y") -> np.ndarray:
    arr = np.array(y, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError(f"{name} must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def mean_center(X, y) -> tuple[np.ndarray, np.ndarray, CenteringInfo]:
    """Column-center ``X`` and center ``y``; return both with the removed means."""
    X = as_matrix(X)
    y = as_vector(y)
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if X.shape[0] < 2:
        raise DegenerateInputError("centering needs at least two samples")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    return X - x_mean, y - y_mean, CenteringInfo(x_mean, y_mean)


def recenter(X_new, info: CenteringInfo) -> np.ndarray:
    """Subtract the calibration column means from new spectra (no rescaling)."""
    X_new = as_matrix(X_new, "X_new")
    if X_new.shape[1] != info.x_mean.shape[0]:
        raise ShapeError(
            f"X_new has {X_new.shape[1]} channels, centering info has {info.x_mean.shape[0]}"
        )
    return X_new - info.x_mean


def pseudo_inverse(M, rcond: float = PINV_RCOND) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values below ``rcond`` times the largest one are treated as zero.
    """
    M = as_matrix(M, "M")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0]))
    keep = s > rcond * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def effective_rank(M, rcond: float = PINV_RCOND) -> int:
    s = np.linalg.svd(as_matrix(M, "M"), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rcond * s[0]))


def solve_spd(S, b) -> np.ndarray:
    """Solve ``S x = b`` for symmetric positive-definite ``S`` by Cholesky.

    Raises
    ------
    SingularityError
        If the Cholesky factorization fails.
    """
    S = np.asarray(S, dtype=float)
    b = np.asarray(b, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError(f"S must be square, got shape {S.shape}")
    if b.shape[0] != S.shape[0]:
        raise ShapeError(f"b has length {b.shape[0]}, S is {S.shape[0]}x{S.shape[0]}")
    scale = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > 1e-10 * scale:
        raise InputError("S is not symmetric")
    try:
        factor = linalg.cho_factor(S, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SingularityError(f"matrix is not positive definite: {exc}") from exc
    return linalg.cho_solve(factor, b, check_finite=False)


def frobenius_norm(M) -> float:
    return float(np.linalg.norm(np.asarray(M, dtype=float)))
