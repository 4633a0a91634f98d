"""Versioned JSON documents for fitted models and transfer maps.

Floats are written with Python's shortest round-trip repr, so loading a
saved document reproduces every number exactly.

Latent model document (``format = "spectral-transfer/latent-model"``,
``version = 1``)::

    {
      "format": ..., "version": 1,
      "config": {"gamma": float, "n_components": int, "center_standards": bool},
      "n_channels": d, "n_components": A,
      "W": [[...] * A] * d, "P": [[...] * A] * d,      # row-major, d rows
      "c_vec": [A floats], "b": [d floats],
      "centering": {"x_mean": [d floats], "y_mean": float},
      "standards_residuals": [{"component": k, "primary_norm": ...,
                               "secondary_norm": ..., "cross_norm": ...}, ...]
    }

Transfer map document (``format = "spectral-transfer/transfer-map"``)
carries ``F`` (d x d, row-major), ``source_label``, ``target_label`` and
``rank``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .baselines import TransferMap
from .dataio import atomic_write_text
from .errors import FormatError
from .gctpls import FitConfig, LatentModel, StandardsResidual
from .numcore import CenteringInfo

MODEL_FORMAT = "spectral-transfer/latent-model"
TRANSFER_FORMAT = "spectral-transfer/transfer-map"
VERSION = 1


def model_to_dict(model: LatentModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": VERSION,
        "config": {
            "gamma": model.config.gamma,
            "n_components": model.config.n_components,
            "center_standards": model.config.center_standards,
        },
        "n_channels": model.n_channels,
        "n_components": model.n_components,
        "W": model.W.tolist(),
        "P": model.P.tolist(),
        "c_vec": model.c_vec.tolist(),
        "b": model.b.tolist(),
        "centering": {"x_mean": model.centering.x_mean.tolist(), "y_mean": model.centering.y_mean},
        "standards_residuals": [
            {"component": r.component, "primary_norm": r.primary_norm,
             "secondary_norm": r.secondary_norm, "cross_norm": r.cross_norm}
            for r in model.residuals
        ],
    }


def _check_header(doc: dict, fmt: str) -> None:
    if not isinstance(doc, dict) or doc.get("format") != fmt:
        raise FormatError(f"not a {fmt} document")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported {fmt} version {doc.get('version')!r}")


def model_from_dict(doc: dict) -> LatentModel:
    _check_header(doc, MODEL_FORMAT)
    try:
        d, A = int(doc["n_channels"]), int(doc["n_components"])
        W = np.array(doc["W"], dtype=float).reshape(d, A)
        P = np.array(doc["P"], dtype=float).reshape(d, A)
        c_vec = np.array(doc["c_vec"], dtype=float).reshape(A)
        b = np.array(doc["b"], dtype=float).reshape(d)
        cen = doc["centering"]
        centering = CenteringInfo(np.array(cen["x_mean"], dtype=float).reshape(d), cen["y_mean"])
        config = FitConfig(**doc["config"])
        residuals = tuple(
            StandardsResidual(int(r["component"]), float(r["primary_norm"]),
                              float(r["secondary_norm"]), float(r["cross_norm"]))
            for r in doc.get("standards_residuals", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed latent model document: {exc}") from exc
    return LatentModel(W=W, P=P, c_vec=c_vec, b=b, centering=centering, config=config,
                       residuals=residuals)


def transfer_map_to_dict(tmap: TransferMap) -> dict:
    return {
        "format": TRANSFER_FORMAT,
        "version": VERSION,
        "source_label": tmap.source_label,
        "target_label": tmap.target_label,
        "rank": tmap.rank,
        "F": tmap.F.tolist(),
    }


def transfer_map_from_dict(doc: dict) -> TransferMap:
    _check_header(doc, TRANSFER_FORMAT)
    try:
        F = np.array(doc["F"], dtype=float)
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise ValueError(f"F must be square, got shape {F.shape}")
        return TransferMap(F=F, source_label=str(doc["source_label"]),
                           target_label=str(doc["target_label"]), rank=int(doc["rank"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed transfer map document: {exc}") from exc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def _load(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def save_model(path, model: LatentModel) -> None:
    atomic_write_text(path, dumps(model_to_dict(model)))


def load_model(path) -> LatentModel:
    return model_from_dict(_load(path))


def save_transfer_map(path, tmap: TransferMap) -> None:
    atomic_write_text(path, dumps(transfer_map_to_dict(tmap)))


def load_transfer_map(path) -> TransferMap:
    return transfer_map_from_dict(_load(path))
