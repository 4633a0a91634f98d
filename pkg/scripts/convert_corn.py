"""Convert the Eigenvector corn archive (corn.mat) into CSV tables plus a manifest.

Usage::

    python3 scripts/convert_corn.py path/to/corn.mat data/corn

Writes one spectra table per instrument (m5, mp5, mp6; 80 x 700, 1100-2498
nm at 2 nm), one table per instrument with the leading ``--n-standards``
(default 3) NBS glass standards in archive order, the four reference values
(moisture, oil, protein, starch) and ``manifest.json`` with SHA-256 checksums. Requires scipy. Variables stored as plain arrays or as
structs with a ``data`` field are both accepted.
"""

import argparse
import sys
from pathlib import Path

import numpy as np
from scipy.io import loadmat

from spectral_transfer.dataio import (
    save_responses_csv,
    save_spectra_csv,
    sha256_file,
    write_manifest,
)
from spectral_transfer.numcore import SpectraMatrix

INSTRUMENTS = ("m5", "mp5", "mp6")
RESPONSES = ["moisture", "oil", "protein", "starch"]
WL_START, WL_STEP = 1100.0, 2.0


def _array(mat, name):
    if name not in mat:
        raise KeyError(f"variable {name!r} not found; have {sorted(k for k in mat if not k.startswith('__'))}")
    value = mat[name]
    # struct arrays load as structured ndarrays; DataSet-like objects keep a 'data' field
    while isinstance(value, np.ndarray) and value.dtype.names:
        if "data" not in value.dtype.names:
            raise ValueError(f"{name}: struct without a 'data' field ({value.dtype.names})")
        value = value["data"].reshape(-1)[0]
    value = np.asarray(value, dtype=float)
    if value.ndim != 2:
        raise ValueError(f"{name}: expected a matrix, got shape {value.shape}")
    return value


def convert(mat_path, out_dir, n_standards=3):
    mat = loadmat(mat_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    props = _array(mat, "propvals")
    n = props.shape[0]
    ids = [f"corn{i + 1}" for i in range(n)]
    files, instruments = {}, {}
    for inst in INSTRUMENTS:
        spec = _array(mat, f"{inst}spec")
        nbs = _array(mat, f"{inst}nbs")[:n_standards]
        if spec.shape[0] != n:
            raise ValueError(f"{inst}spec has {spec.shape[0]} rows, propvals has {n}")
        wl = WL_START + WL_STEP * np.arange(spec.shape[1])
        spec_file, nbs_file = f"{inst}_spectra.csv", f"{inst}_nbs.csv"
        save_spectra_csv(out / spec_file, SpectraMatrix(spec, wl, ids))
        save_spectra_csv(out / nbs_file, SpectraMatrix(nbs, wl, [f"nbs{i + 1}" for i in range(nbs.shape[0])]))
        instruments[inst] = {"spectra": spec_file, "standards": nbs_file}
        files[f"{inst}_spectra"] = spec_file
        files[f"{inst}_standards"] = nbs_file
    save_responses_csv(out / "responses.csv", RESPONSES, props[:, :4], ids)
    files["responses"] = "responses.csv"

    manifest = out / "manifest.json"
    write_manifest(manifest, {
        "name": "corn",
        "files": {"responses": "responses.csv"},
        "instruments": instruments,
        "primary": "m5",
        "secondary": "mp6",
        "scenarios": [["m5", "mp6"], ["mp6", "m5"], ["mp5", "mp6"]],
        "response_names": RESPONSES,
        "wavelength_start_nm": WL_START,
        "wavelength_step_nm": WL_STEP,
        "checksums": {rel: sha256_file(out / rel) for rel in sorted(set(files.values()))},
    })
    return manifest


def main(argv=None):
    parser = argparse.ArgumentParser(description="Convert corn.mat to CSV tables and a manifest.")
    parser.add_argument("mat", type=Path)
    parser.add_argument("out", type=Path)
    parser.add_argument("--n-standards", type=int, default=3,
                        help="leading NBS standards to keep, in archive order")
    args = parser.parse_args(argv)
    try:
        print(convert(args.mat, args.out, args.n_standards))
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
