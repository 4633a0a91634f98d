"""Transfer-evaluation pipeline shared by the CLI subcommands.

Protocol: Kennard-Stone picks the calibration samples from the primary
instrument's spectra; the remaining samples, measured on the secondary
instrument, form the validation set. Calibration data are centered and
validation spectra re-centered on the calibration mean. Standards are used
uncentered unless asked otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .baselines import apply_transfer, direct_standardization, fit_pls
from .dataio import Dataset, ExperimentResult
from .errors import InputError
from .gctpls import FitConfig, LatentModel, fit, reconstruct, standards_score_gap, transform
from .graphreg import StandardsPair
from .sampling import SplitResult, kennard_stone_split, rmsep, select_corn_standards

logger = logging.getLogger(__name__)

METHOD_LABELS = {"gct": "GCT-PLS", "pls": "PLS", "ds": "DS+PLS"}


@dataclass(frozen=True)
class StandardsMode:
    """``external`` (standards files of the dataset) or ``ks:N`` (N calibration samples)."""

    kind: str = "external"
    n: int = 0

    @classmethod
    def parse(cls, text: str) -> "StandardsMode":
        text = text.strip().lower()
        if text == "external":
            return cls()
        if text.startswith("ks:") or text.startswith("kennard-stone:"):
            try:
                n = int(text.split(":", 1)[1])
            except ValueError as exc:
                raise InputError(f"bad standards mode {text!r}") from exc
            if n < 2:
                raise InputError("ks:N needs N >= 2")
            return cls("ks", n)
        raise InputError(f"standards mode must be 'external' or 'ks:N', got {text!r}")

    def __str__(self) -> str:
        return "external" if self.kind == "external" else f"ks:{self.n}"


def default_calibration_size(n_samples: int) -> int:
    # 60 of 80 for the corn set
    return max(2, int(round(0.75 * n_samples)))


def split_dataset(dataset: Dataset, n_calibration: int | None = None) -> SplitResult:
    n = dataset.primary.shape[0]
    n_cal = default_calibration_size(n) if n_calibration is None else n_calibration
    if not 2 <= n_cal < n:
        raise InputError(f"calibration size must be in 2..{n - 1}, got {n_cal}")
    return kennard_stone_split(dataset.primary.values, n_cal)


def resolve_standards(dataset: Dataset, split: SplitResult, mode: StandardsMode) -> StandardsPair:
    if mode.kind == "external":
        if dataset.standards is None:
            raise InputError("dataset has no standards files; use --standards ks:N")
        return dataset.standards
    cal = np.array(split.calibration_indices)
    picks = cal[select_corn_standards(dataset.primary.values[cal], mode.n)]
    return StandardsPair(dataset.primary.values[picks], dataset.secondary.values[picks])


@dataclass
class Prepared:
    X_cal: np.ndarray
    y_cal: np.ndarray
    X_val_secondary: np.ndarray
    X_val_primary: np.ndarray
    y_val: np.ndarray
    val_ids: list[str]


def prepare(dataset: Dataset, split: SplitResult, response: str) -> Prepared:
    if response not in dataset.responses:
        raise InputError(f"unknown response {response!r}; have {sorted(dataset.responses)}")
    y = dataset.responses[response]
    cal = list(split.calibration_indices)
    val = list(split.validation_indices)
    ids = dataset.primary.sample_ids
    val_ids = [ids[i] for i in val] if ids is not None else [str(i) for i in val]
    return Prepared(
        X_cal=dataset.primary.values[cal],
        y_cal=y[cal],
        X_val_secondary=dataset.secondary.values[val],
        X_val_primary=dataset.primary.values[val],
        y_val=y[val],
        val_ids=val_ids,
    )


def _latent_tables(model: LatentModel, data: Prepared, standards_used: StandardsPair | None):
    A = model.n_components
    scores = {
        "calibration": transform(model, data.X_cal),
        "validation_secondary": transform(model, data.X_val_secondary),
    }
    recon = {}
    for n_lv in range(1, A + 1):
        recon[("calibration", "mean", n_lv)] = reconstruct(model, data.X_cal, n_lv).mean(axis=0)
        recon[("validation_secondary", "mean", n_lv)] = \
            reconstruct(model, data.X_val_secondary, n_lv).mean(axis=0)
    residual_spectra = {}
    norms = []
    if model.components and model.residuals and standards_used is not None:
        scores["standards_primary"] = np.column_stack([c.t_p for c in model.components])
        scores["standards_secondary"] = np.column_stack([c.t_s for c in model.components])
        for res in model.residuals:
            norms.append((res.component, res.primary_norm, res.secondary_norm, res.cross_norm))
            if res.component == 0:
                continue
            residual_spectra[(res.component, "standards_primary")] = res.Xp
            residual_spectra[(res.component, "standards_secondary")] = res.Xs
            for i in range(standards_used.n_standards):
                recon[("standards_primary", str(i), res.component)] = standards_used.Xp[i] - res.Xp[i]
                recon[("standards_secondary", str(i), res.component)] = standards_used.Xs[i] - res.Xs[i]
    return scores, recon, residual_spectra, norms


def run_method(dataset: Dataset, split: SplitResult, response: str, method: str,
               standards: StandardsPair | None, gamma: float = 1e6, n_lv: int = 2,
               center_standards: bool = False) -> tuple[ExperimentResult, LatentModel]:
    """Fit one method on the calibration split and evaluate it on both validation sets."""
    if method not in METHOD_LABELS:
        raise InputError(f"unknown method {method!r}; choose from {sorted(METHOD_LABELS)}")
    data = prepare(dataset, split, response)
    used = None
    if method == "ds":
        if standards is None:
            raise InputError("direct standardization needs standards")
        tmap = direct_standardization(standards, dataset.primary_label, dataset.secondary_label)
        model = fit_pls(apply_transfer(tmap, data.X_cal), data.y_cal, n_lv)
        pred_sec = model.predict(data.X_val_secondary)
        pred_pri = model.predict(apply_transfer(tmap, data.X_val_primary))
        gamma = 0.0
    else:
        if method == "pls":
            gamma = 0.0
        config = FitConfig(gamma=gamma, n_components=n_lv, center_standards=center_standards)
        model = fit(data.X_cal, data.y_cal, standards, config)
        pred_sec = model.predict(data.X_val_secondary)
        pred_pri = model.predict(data.X_val_primary)
        if standards is not None:
            used = standards.centered() if center_standards else standards

    scores, recon, residual_spectra, norms = _latent_tables(model, data, used)
    result = ExperimentResult(
        primary=dataset.primary_label,
        secondary=dataset.secondary_label,
        response=response,
        method=METHOD_LABELS[method],
        gamma=float(gamma),
        n_lv=n_lv,
        rmsep_secondary=rmsep(data.y_val, pred_sec),
        rmsep_primary=rmsep(data.y_val, pred_pri),
        y_true=data.y_val,
        y_pred_secondary=pred_sec,
        y_pred_primary=pred_pri,
        wavelengths=dataset.wavelengths,
        sample_ids=data.val_ids,
        residual_norms=norms,
        scores=scores,
        reconstructions=recon,
        residual_spectra=residual_spectra,
    )
    logger.info("%s: RMSEP secondary %.4g, primary %.4g", result.label,
                result.rmsep_secondary, result.rmsep_primary)
    return result, model


@dataclass(frozen=True)
class SweepRow:
    gamma: float
    rmsep_secondary: float
    rmsep_primary: float
    score_mismatch: float
    reconstruction_gap: float


def sweep_row(result: ExperimentResult, model: LatentModel) -> SweepRow:
    A = model.n_components
    gap = float(np.linalg.norm(result.reconstructions[("calibration", "mean", A)]
                               - result.reconstructions[("validation_secondary", "mean", A)]))
    return SweepRow(result.gamma, result.rmsep_secondary, result.rmsep_primary,
                    standards_score_gap(model), gap)
