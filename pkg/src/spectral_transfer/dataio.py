"""Dataset ingestion, synthetic two-instrument data and result tables.

CSV layout: one spectrum per row. The first row is a header when its first
cell is not a number (e.g. ``sample,1100,1102,...``) or when it is a run of
strictly increasing integers >= 100 followed by data rows (a bare
wavelength header such as ``1100,1102,1104``). When any data row starts with
a non-numeric cell, the first column holds sample ids.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import FormatError, InputError
from .graphreg import StandardsPair
from .numcore import SpectraMatrix

logger = logging.getLogger(__name__)

MANIFEST_FORMAT = "spectral-transfer-manifest"
MANIFEST_VERSION = 1
ROLES = ("primary_spectra", "secondary_spectra", "responses", "primary_standards", "secondary_standards")


def _num(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def _fmt(x: float) -> str:
    return repr(float(x))


def _read_rows(path) -> list[list[str]]:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = [row for row in csv.reader(fh)]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    rows = [[c.strip() for c in row] for row in rows if row and any(c.strip() for c in row)]
    if not rows:
        raise FormatError(f"{path}: empty file")
    return rows


def _is_wavelength_row(row: list[str]) -> bool:
    vals = [_num(c) for c in row]
    if any(v is None for v in vals):
        return False
    arr = np.array(vals)
    return bool(np.all(arr >= 100) and np.all(arr == np.round(arr)) and np.all(np.diff(arr) > 0))


def _parse_table(path, header: bool | None = None):
    """Split a CSV into (header cells or None, id column or None, float matrix)."""
    rows = _read_rows(path)
    if header is None:
        first = rows[0]
        header = _num(first[0]) is None or (len(rows) > 1 and _is_wavelength_row(first))
    head = rows[0] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise FormatError(f"{path}: no data rows")
    offset = 2 if header else 1

    width = len(head) if head is not None else len(body[0])
    for r, row in enumerate(body):
        if len(row) != width:
            raise FormatError(f"{path}: row {r + offset} has {len(row)} cells, expected {width}")
    has_ids = any(_num(row[0]) is None for row in body)
    start = 1 if has_ids else 0

    values = np.empty((len(body), width - start))
    for r, row in enumerate(body):
        for c in range(start, width):
            v = _num(row[c])
            if v is None:
                raise FormatError(
                    f"{path}: non-numeric cell {row[c]!r} at row {r + offset}, column {c + 1}"
                )
            values[r, c - start] = v
    ids = [row[0] for row in body] if has_ids else None
    labels = head[start:] if head is not None else None
    return labels, ids, values


def load_spectra_csv(path, header: bool | None = None) -> SpectraMatrix:
    labels, ids, values = _parse_table(path, header)
    wavelengths = None
    if labels is not None:
        nums = [_num(c) for c in labels]
        if all(v is not None for v in nums):
            wavelengths = np.array(nums)
    try:
        return SpectraMatrix(values, wavelengths, ids)
    except InputError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def save_spectra_csv(path, spectra: SpectraMatrix) -> None:
    """Write spectra with shortest round-trip float text.

    A ``sample`` id column is always written (``s0, s1, ...`` when the matrix
    has no ids) so the header is unambiguous; channels without wavelengths
    are labelled ``ch0, ch1, ...``.
    """
    X = spectra.values
    ids = spectra.sample_ids or tuple(f"s{i}" for i in range(X.shape[0]))
    if spectra.wavelengths is None:
        labels = [f"ch{j}" for j in range(X.shape[1])]
    else:
        labels = [_fmt(w) for w in spectra.wavelengths]
    rows = ([sid] + [_fmt(v) for v in row] for sid, row in zip(ids, X))
    atomic_write_text(path, _csv_text(["sample"] + labels, rows))


def load_responses_csv(path) -> tuple[list[str], np.ndarray]:
    """Response table with a header of analyte names; returns (names, N x m matrix)."""
    labels, _, values = _parse_table(path, header=True)
    return list(labels), values


def save_responses_csv(path, names, values, sample_ids=None) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if sample_ids is None:
        header, rows = list(names), ([_fmt(v) for v in row] for row in values)
    else:
        header = ["sample"] + list(names)
        rows = ([sid] + [_fmt(v) for v in row] for sid, row in zip(sample_ids, values))
    atomic_write_text(path, _csv_text(header, rows))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# --------------------------------------------------------------------------- manifest


@dataclass
class DatasetManifest:
    """Where a dataset's CSV tables live and how they map to roles.

    A manifest either names the five roles directly under ``files`` or
    describes several ``instruments`` (each with ``spectra`` and optional
    ``standards``) plus a shared ``responses`` file, from which any
    primary/secondary pair can be resolved.
    """

    name: str
    root: Path
    response_names: list[str]
    files: dict[str, str] = field(default_factory=dict)
    instruments: dict[str, dict[str, str]] = field(default_factory=dict)
    scenarios: list[tuple[str, str]] = field(default_factory=list)
    primary: str | None = None
    secondary: str | None = None
    wavelength_start_nm: float | None = None
    wavelength_step_nm: float | None = None
    checksums: dict[str, str] = field(default_factory=dict)

    def roles(self, primary: str | None = None, secondary: str | None = None) -> dict[str, Path]:
        primary = primary or self.primary
        secondary = secondary or self.secondary
        if self.instruments and primary and secondary:
            for label in (primary, secondary):
                if label not in self.instruments:
                    raise InputError(f"instrument {label!r} not in manifest {self.name!r}")
            p, s = self.instruments[primary], self.instruments[secondary]
            mapping = {"primary_spectra": p["spectra"], "secondary_spectra": s["spectra"],
                       "responses": self.files["responses"]}
            if "standards" in p and "standards" in s:
                mapping["primary_standards"] = p["standards"]
                mapping["secondary_standards"] = s["standards"]
        else:
            mapping = dict(self.files)
        return {role: self.root / rel for role, rel in mapping.items()}

    def verify(self) -> None:
        for rel, digest in self.checksums.items():
            path = self.root / rel
            if not path.exists():
                raise InputError(f"manifest file missing: {path}")
            if sha256_file(path) != digest:
                raise FormatError(f"checksum mismatch for {path}")


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if doc.get("format") != MANIFEST_FORMAT:
        raise FormatError(f"{path}: not a {MANIFEST_FORMAT} document")
    if doc.get("version") != MANIFEST_VERSION:
        raise FormatError(f"{path}: unsupported manifest version {doc.get('version')!r}")
    names = list(doc.get("response_names") or [])
    if not names:
        raise FormatError(f"{path}: response_names must be a non-empty list")
    manifest = DatasetManifest(
        name=str(doc.get("name", path.stem)),
        root=path.parent,
        response_names=names,
        files=dict(doc.get("files", {})),
        instruments={k: dict(v) for k, v in doc.get("instruments", {}).items()},
        scenarios=[tuple(pair) for pair in doc.get("scenarios", [])],
        primary=doc.get("primary"),
        secondary=doc.get("secondary"),
        wavelength_start_nm=doc.get("wavelength_start_nm"),
        wavelength_step_nm=doc.get("wavelength_step_nm"),
        checksums=dict(doc.get("checksums", {})),
    )
    if "responses" not in manifest.files:
        raise FormatError(f"{path}: files.responses is required")
    if not manifest.instruments:
        missing = [r for r in ("primary_spectra", "secondary_spectra") if r not in manifest.files]
        if missing:
            raise FormatError(f"{path}: missing file roles {missing}")
    for role, p in manifest.roles().items():
        if not p.exists():
            raise InputError(f"manifest {role} file not found: {p}")
    manifest.verify()
    return manifest


def write_manifest(path, doc: dict) -> None:
    doc = {"format": MANIFEST_FORMAT, "version": MANIFEST_VERSION, **doc}
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


@dataclass
class Dataset:
    primary: SpectraMatrix
    secondary: SpectraMatrix
    responses: dict[str, np.ndarray]
    standards: StandardsPair | None
    primary_label: str
    secondary_label: str

    @property
    def wavelengths(self) -> np.ndarray:
        if self.primary.wavelengths is not None:
            return self.primary.wavelengths
        return np.arange(self.primary.shape[1], dtype=float)


def _with_axis(spectra: SpectraMatrix, manifest: DatasetManifest) -> SpectraMatrix:
    if spectra.wavelengths is not None or manifest.wavelength_start_nm is None:
        return spectra
    step = manifest.wavelength_step_nm or 1.0
    wl = manifest.wavelength_start_nm + step * np.arange(spectra.shape[1])
    return SpectraMatrix(spectra.values, wl, spectra.sample_ids)


def load_dataset(manifest: DatasetManifest, primary: str | None = None,
                 secondary: str | None = None) -> Dataset:
    roles = manifest.roles(primary, secondary)
    Xp = _with_axis(load_spectra_csv(roles["primary_spectra"]), manifest)
    Xs = _with_axis(load_spectra_csv(roles["secondary_spectra"]), manifest)
    if Xp.shape != Xs.shape:
        raise FormatError(f"primary {Xp.shape} and secondary {Xs.shape} spectra differ in shape")
    names, Y = load_responses_csv(roles["responses"])
    if Y.shape[0] != Xp.shape[0]:
        raise FormatError(f"{Y.shape[0]} response rows for {Xp.shape[0]} spectra")
    responses = {name: Y[:, j] for j, name in enumerate(names)}
    for name in manifest.response_names:
        if name not in responses:
            raise FormatError(f"response {name!r} not found in {roles['responses']}")
    standards = None
    if "primary_standards" in roles and "secondary_standards" in roles:
        standards = StandardsPair(load_spectra_csv(roles["primary_standards"]).values,
                                  load_spectra_csv(roles["secondary_standards"]).values)
        if standards.n_channels != Xp.shape[1]:
            raise FormatError("standards and spectra differ in channel count")
    return Dataset(Xp, Xs, responses, standards,
                   primary or manifest.primary or "primary",
                   secondary or manifest.secondary or "secondary")


# --------------------------------------------------------------------------- synthetic data


@dataclass(frozen=True)
class ShiftSpec:
    """Secondary-instrument perturbation, applied identically to every spectrum.

    ``offset`` scales an additive broad band over the analyte region,
    ``gain`` a linear wavelength-dependent multiplicative ramp, and
    ``shift_nm`` moves the wavelength axis.
    """

    offset: float = 0.0
    gain: float = 0.0
    shift_nm: float = 0.0

    @classmethod
    def parse(cls, text: str | None) -> "ShiftSpec":
        """``"offset=0.05,gain=0.02,shift=1"``; ``"none"`` or empty for no shift."""
        if not text or text.strip().lower() == "none":
            return cls()
        kwargs = {}
        aliases = {"offset": "offset", "gain": "gain", "shift": "shift_nm", "shift_nm": "shift_nm"}
        for part in text.split(","):
            key, sep, value = part.partition("=")
            key = key.strip().lower()
            if not sep or key not in aliases:
                raise InputError(f"bad shift spec component {part!r}")
            try:
                kwargs[aliases[key]] = float(value)
            except ValueError as exc:
                raise InputError(f"bad shift spec value {part!r}") from exc
        return cls(**kwargs)

    def is_identity(self) -> bool:
        return self.offset == 0.0 and self.gain == 0.0 and self.shift_nm == 0.0


class SyntheticData(NamedTuple):
    x_cal: np.ndarray
    y_cal: np.ndarray
    standards: StandardsPair
    x_val: np.ndarray
    y_val: np.ndarray
    x_val_primary: np.ndarray
    x_cal_secondary: np.ndarray
    wavelengths: np.ndarray


def _band(wl, center, width):
    return np.exp(-0.5 * ((wl - center) / width) ** 2)


def synth_two_instrument(n_samples: int = 60, d: int = 200, K: int = 3,
                         shift_spec: ShiftSpec | str | None = None, noise_level: float = 1e-4,
                         seed: int = 0, n_val: int | None = None,
                         standards_spread: float = 0.5) -> SyntheticData:
    """Corn-like calibration samples and glass-like standards on two instruments.

    Sample spectra are mixtures of four overlapping bands in the lower 60 %
    of the range plus a random baseline; the response is linear in the first
    two band intensities. Standards are mixtures of three narrow bands in the
    upper part of the range, so they share no features with the samples;
    each standard's overall level is scaled by a factor drawn from
    ``1 +/- standards_spread``. With near-identical levels the standards'
    scores are almost constant and cannot carry an offset past the first
    latent variable.
    ``x_val`` holds the validation samples as measured on the secondary
    instrument; the first five fields follow the (cal X, cal y, standards,
    secondary val X, val y) order.
    """
    if isinstance(shift_spec, str) or shift_spec is None:
        shift_spec = ShiftSpec.parse(shift_spec)
    n_val = n_samples // 3 if n_val is None else n_val
    for name, value in (("n_samples", n_samples), ("d", d), ("K", K), ("n_val", n_val)):
        if int(value) != value or value < 1:
            raise InputError(f"{name} must be a positive integer, got {value!r}")
    if n_samples < 3 or d < 10:
        raise InputError("need n_samples >= 3 and d >= 10")
    if noise_level < 0:
        raise InputError("noise_level must be non-negative")
    if not 0 <= standards_spread < 1:
        raise InputError("standards_spread must be in [0, 1)")

    rng = np.random.default_rng(seed)
    wl = 1100.0 + 2.0 * np.arange(d)
    lo, span = wl[0], wl[-1] - wl[0]

    centers = lo + span * np.array([0.12, 0.22, 0.33, 0.45])
    widths = span * np.array([0.05, 0.06, 0.05, 0.07])
    bands = np.array([_band(wl, c, s) for c, s in zip(centers, widths)])
    baseline = np.vstack([np.ones(d), (wl - lo) / span])

    n_total = n_samples + n_val
    conc = np.column_stack([
        rng.uniform(0.2, 1.0, size=(n_total, 2)),
        rng.uniform(0.2, 0.3, size=(n_total, 2)),
    ])
    base = rng.normal(0.0, [0.01, 0.005], size=(n_total, 2))
    X_true = 0.3 + conc @ bands + base @ baseline
    y = 10.0 * conc[:, 0] + 5.0 * conc[:, 1]

    glass_centers = lo + span * np.array([0.70, 0.80, 0.92])
    glass = np.array([_band(wl, c, 0.015 * span) for c in glass_centers])
    thickness = rng.uniform(0.5, 1.5, size=(K, glass.shape[0]))
    level = 1.0 + standards_spread * rng.uniform(-1.0, 1.0, size=(K, 1))
    S_true = level * (0.1 + thickness @ glass)

    offset_band = _band(wl, lo + 0.3 * span, 0.08 * span)
    ramp = 2.0 * (wl - lo) / span - 1.0

    def secondary(M):
        out = M
        if shift_spec.shift_nm:
            out = np.array([np.interp(wl - shift_spec.shift_nm, wl, row) for row in out])
        return out * (1.0 + shift_spec.gain * ramp) + shift_spec.offset * offset_band

    def measure(M):
        return M + noise_level * rng.standard_normal(M.shape)

    Xp_all = measure(X_true)
    Xs_all = measure(secondary(X_true))
    standards = StandardsPair(measure(S_true), measure(secondary(S_true)))

    cal, val = slice(0, n_samples), slice(n_samples, n_total)
    return SyntheticData(
        x_cal=Xp_all[cal],
        y_cal=y[cal],
        standards=standards,
        x_val=Xs_all[val],
        y_val=y[val],
        x_val_primary=Xp_all[val],
        x_cal_secondary=Xs_all[cal],
        wavelengths=wl,
    )


def write_synthetic_dataset(data: SyntheticData, out_dir, name: str = "synthetic") -> Path:
    """Write a synthetic dataset as CSV tables plus a manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_cal, n_val = data.x_cal.shape[0], data.x_val.shape[0]
    ids = [f"s{i}" for i in range(n_cal + n_val)]
    wl = data.wavelengths
    files = {
        "primary_spectra": "primary_spectra.csv",
        "secondary_spectra": "secondary_spectra.csv",
        "responses": "responses.csv",
        "primary_standards": "primary_standards.csv",
        "secondary_standards": "secondary_standards.csv",
    }
    save_spectra_csv(out / files["primary_spectra"],
                     SpectraMatrix(np.vstack([data.x_cal, data.x_val_primary]), wl, ids))
    save_spectra_csv(out / files["secondary_spectra"],
                     SpectraMatrix(np.vstack([data.x_cal_secondary, data.x_val]), wl, ids))
    save_responses_csv(out / files["responses"], ["y"],
                       np.concatenate([data.y_cal, data.y_val])[:, None], ids)
    K = data.standards.n_standards
    std_ids = [f"std{i}" for i in range(K)]
    save_spectra_csv(out / files["primary_standards"], SpectraMatrix(data.standards.Xp, wl, std_ids))
    save_spectra_csv(out / files["secondary_standards"], SpectraMatrix(data.standards.Xs, wl, std_ids))
    manifest = out / "manifest.json"
    write_manifest(manifest, {
        "name": name,
        "files": files,
        "response_names": ["y"],
        "wavelength_start_nm": float(wl[0]),
        "wavelength_step_nm": float(wl[1] - wl[0]) if wl.size > 1 else 1.0,
        "primary": "primary",
        "secondary": "secondary",
        "checksums": {rel: sha256_file(out / rel) for rel in files.values()},
    })
    return manifest


# --------------------------------------------------------------------------- result tables

RESULT_TABLES = {
    "rmsep_summary.csv": ["experiment", "primary", "secondary", "response", "method", "gamma",
                          "n_lv", "rmsep_secondary", "rmsep_primary"],
    "scores.csv": ["experiment", "set", "sample", "lv", "score"],
    "reconstructions.csv": ["experiment", "set", "sample", "n_lv", "wavelength", "value"],
    "residuals.csv": ["experiment", "lv", "primary_norm", "secondary_norm", "cross_norm"],
    "residual_spectra.csv": ["experiment", "lv", "set", "sample", "wavelength", "value"],
    "predictions.csv": ["experiment", "sample", "y_true", "y_pred_secondary", "y_pred_primary"],
}


@dataclass
class ExperimentResult:
    """One fitted scenario: primary -> secondary, one response, one method."""

    primary: str
    secondary: str
    response: str
    method: str
    gamma: float
    n_lv: int
    rmsep_secondary: float
    rmsep_primary: float
    y_true: np.ndarray
    y_pred_secondary: np.ndarray
    y_pred_primary: np.ndarray
    wavelengths: np.ndarray
    sample_ids: list[str] = field(default_factory=list)
    residual_norms: list[tuple[int, float, float, float]] = field(default_factory=list)
    scores: dict[str, np.ndarray] = field(default_factory=dict)
    reconstructions: dict[tuple[str, str, int], np.ndarray] = field(default_factory=dict)
    residual_spectra: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)

    def validate(self) -> None:
        n = len(self.y_true)
        if n == 0:
            raise InputError(f"{self.label}: no validation predictions")
        if len(self.y_pred_secondary) != n or len(self.y_pred_primary) != n:
            raise InputError(f"{self.label}: prediction count differs from validation size")
        if not (self.rmsep_secondary >= 0 and self.rmsep_primary >= 0):
            raise InputError(f"{self.label}: RMSEP must be non-negative")
        arrays = [self.y_true, self.y_pred_secondary, self.y_pred_primary,
                  *self.scores.values(), *self.reconstructions.values(), *self.residual_spectra.values()]
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise InputError(f"{self.label}: non-finite values in result")

    @property
    def label(self) -> str:
        return f"{self.primary}->{self.secondary} {self.response} {self.method}"


def _table_rows(results: list[ExperimentResult]) -> dict[str, list[list[str]]]:
    tables = {name: [] for name in RESULT_TABLES}
    for k, res in enumerate(results):
        ids = res.sample_ids or [str(i) for i in range(len(res.y_true))]
        tables["rmsep_summary.csv"].append([
            str(k), res.primary, res.secondary, res.response, res.method, _fmt(res.gamma),
            str(res.n_lv), _fmt(res.rmsep_secondary), _fmt(res.rmsep_primary)])
        for sid, yt, ys, yp in zip(ids, res.y_true, res.y_pred_secondary, res.y_pred_primary):
            tables["predictions.csv"].append([str(k), sid, _fmt(yt), _fmt(ys), _fmt(yp)])
        for set_name, T in res.scores.items():
            for i, row in enumerate(T):
                for a, v in enumerate(row):
                    tables["scores.csv"].append([str(k), set_name, str(i), str(a + 1), _fmt(v)])
        for (set_name, sample, n_lv), spec in res.reconstructions.items():
            for wl, v in zip(res.wavelengths, spec):
                tables["reconstructions.csv"].append(
                    [str(k), set_name, sample, str(n_lv), _fmt(wl), _fmt(v)])
        for lv, pn, sn, cn in res.residual_norms:
            tables["residuals.csv"].append([str(k), str(lv), _fmt(pn), _fmt(sn), _fmt(cn)])
        for (lv, set_name), M in res.residual_spectra.items():
            for i, row in enumerate(M):
                for wl, v in zip(res.wavelengths, row):
                    tables["residual_spectra.csv"].append(
                        [str(k), str(lv), set_name, str(i), _fmt(wl), _fmt(v)])
    return tables


def emit_result_tables(results: list[ExperimentResult], out_dir) -> list[Path]:
    """Write the plot-ready CSV tables for a batch of results.

    Every result is validated before anything is written; each file is
    written atomically.
    """
    if not results:
        raise InputError("no results to emit")
    for res in results:
        res.validate()
    tables = _table_rows(results)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, header in RESULT_TABLES.items():
            path = out / name
            atomic_write_text(path, _csv_text(header, tables[name]))
            written.append(path)
    except OSError as exc:
        raise EnvironmentError(f"cannot write result tables to {out}: {exc}") from exc
    return written


def write_table(path, header: list[str], rows) -> Path:
    """Write one CSV table atomically; floats use shortest round-trip text."""
    text_rows = [[_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row] for row in rows]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, _csv_text(header, text_rows))
    return path
