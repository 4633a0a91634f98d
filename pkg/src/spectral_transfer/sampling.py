"""Kennard-Stone sample selection and prediction error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InputError, ShapeError
from .numcore import as_matrix, as_vector


@dataclass(frozen=True)
class SplitResult:
    calibration_indices: tuple[int, ...]
    validation_indices: tuple[int, ...]


def kennard_stone(X, n_select: int) -> list[int]:
    """Indices of ``n_select`` samples picked by the Kennard-Stone maximin rule.

    Starts from the two most distant samples (lower index first) and then
    repeatedly adds the sample whose nearest selected neighbour is farthest
    away. Euclidean distance on the rows as given; ties go to the lowest
    index, so the result is deterministic.
    """
    X = np.ascontiguousarray(as_matrix(X), dtype=np.float64)
    n = X.shape[0]
    if int(n_select) != n_select or not 2 <= n_select <= n:
        raise InputError(f"n_select must be in 2..{n}, got {n_select!r}")
    first, second = kernels.max_distance_pair(X)
    order = kernels.maximin_select(X, int(first), int(second), int(n_select))
    return [int(i) for i in order]


def kennard_stone_split(X, n_calibration: int) -> SplitResult:
    """Kennard-Stone picks form the calibration set; the rest, in index order, validate."""
    cal = kennard_stone(X, n_calibration)
    chosen = set(cal)
    val = [i for i in range(as_matrix(X).shape[0]) if i not in chosen]
    return SplitResult(tuple(cal), tuple(val))


def select_corn_standards(X_cal, n: int = 10) -> list[int]:
    """Transfer standards taken from the calibration samples themselves.

    Returned indices are row positions within ``X_cal``.
    """
    n_cal = as_matrix(X_cal).shape[0]
    if n > n_cal:
        raise InputError(f"cannot pick {n} standards from {n_cal} calibration samples")
    if n == n_cal:
        return list(range(n_cal))
    return kennard_stone(X_cal, n)


def rmsep(y_true, y_pred) -> float:
    y_true = as_vector(y_true, "y_true")
    y_pred = as_vector(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch: {y_true.shape[0]} vs {y_pred.shape[0]}")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))
