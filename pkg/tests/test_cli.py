import csv

import numpy as np
import pytest

from spectral_transfer.cli import main
from spectral_transfer.dataio import (
    save_responses_csv,
    save_spectra_csv,
    sha256_file,
    write_manifest,
)
from spectral_transfer.numcore import SpectraMatrix


def synth(tmp_path, *extra, name="data"):
    out = tmp_path / name
    assert main(["synth", "--out", str(out), "--n-samples", "40", "--n-val", "12",
                 "--channels", "80", *extra]) == 0
    return out / "manifest.json"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_synth_then_transfer_eval(tmp_path, capsys):
    manifest = synth(tmp_path)
    out = tmp_path / "eval"
    assert main(["transfer-eval", "--manifest", str(manifest), "--out", str(out)]) == 0
    summary = rows(out / "rmsep_summary.csv")
    assert [r["method"] for r in summary] == ["GCT-PLS", "PLS", "DS+PLS"]
    gct, pls = (float(r["rmsep_secondary"]) for r in summary[:2])
    assert gct < pls
    assert "RMSEP_secondary" in capsys.readouterr().out


def test_identical_instruments_gct_equals_pls(tmp_path):
    manifest = synth(tmp_path, "--shift", "none", "--noise", "0")
    out = tmp_path / "eval"
    assert main(["transfer-eval", "--manifest", str(manifest), "--method", "gct,pls",
                 "--out", str(out)]) == 0
    gct, pls = rows(out / "rmsep_summary.csv")
    assert float(gct["rmsep_secondary"]) == pytest.approx(float(pls["rmsep_secondary"]), rel=1e-8)
    assert main(["diagnose", "--manifest", str(manifest), "--out", str(tmp_path / "d")]) == 0
    flagged = [r["lv"] for r in rows(tmp_path / "d" / "diagnose.csv") if r["flagged"] == "yes"]
    assert flagged == ["0"]


def test_sweep_single_gamma_matches_pls(tmp_path):
    manifest = synth(tmp_path)
    assert main(["sweep", "--manifest", str(manifest), "--gamma-grid", "0",
                 "--out", str(tmp_path / "s")]) == 0
    assert main(["transfer-eval", "--manifest", str(manifest), "--method", "pls",
                 "--out", str(tmp_path / "e")]) == 0
    sweep = rows(tmp_path / "s" / "sweep.csv")
    pls = rows(tmp_path / "e" / "rmsep_summary.csv")
    assert len(sweep) == 1
    assert float(sweep[0]["rmsep_secondary"]) == pytest.approx(float(pls[0]["rmsep_secondary"]), rel=1e-12)


def test_sweep_mismatch_shrinks(tmp_path):
    manifest = synth(tmp_path)
    assert main(["sweep", "--manifest", str(manifest), "--out", str(tmp_path / "s")]) == 0
    sweep = rows(tmp_path / "s" / "sweep.csv")
    assert [float(r["gamma"]) for r in sweep] == [0.0, 1e2, 1e4, 1e6]
    assert float(sweep[-1]["score_mismatch"]) <= 0.1 * float(sweep[0]["score_mismatch"])


@pytest.mark.parametrize("K,shift,expected", [("1", "offset=0.5", "1"),
                                              ("2", "offset=0.5,gain=0.2", "2")])
def test_diagnose_flags(tmp_path, capsys, K, shift, expected):
    manifest = synth(tmp_path, "--n-standards", K, "--shift", shift)
    assert main(["diagnose", "--manifest", str(manifest), "--out", str(tmp_path / "d")]) == 0
    assert f"flagged_lv={expected}" in capsys.readouterr().out


def test_fit_and_predict(tmp_path):
    manifest = synth(tmp_path)
    model = tmp_path / "m" / "model.json"
    assert main(["fit", "--manifest", str(manifest), "--out", str(model)]) == 0
    preds = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(model), "--spectra",
                 str(manifest.parent / "secondary_spectra.csv"), "--out", str(preds)]) == 0
    got = rows(preds)
    assert len(got) == 52 and got[0]["sample"] == "s0"


def test_outputs_are_byte_identical(tmp_path):
    manifest = synth(tmp_path)
    for run in ("a", "b"):
        assert main(["transfer-eval", "--manifest", str(manifest), "--out", str(tmp_path / run)]) == 0
    for name in ("rmsep_summary.csv", "scores.csv", "reconstructions.csv", "residuals.csv",
                 "residual_spectra.csv", "predictions.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main([]) == 2
    assert main(["sweep", "--manifest", "x.json", "--gamma-grid", "a,b", "--out", "o"]) == 2
    assert main(["transfer-eval", "--manifest", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o")]) == 2
    manifest = synth(tmp_path)
    assert main(["transfer-eval", "--manifest", str(manifest), "--response", "fat",
                 "--out", str(tmp_path / "o")]) == 2
    assert main(["transfer-eval", "--manifest", str(manifest), "--lv", "200",
                 "--out", str(tmp_path / "o")]) == 2
    assert "error:" in capsys.readouterr().err


def test_rank_exhaustion_exit_3(tmp_path, capsys, rng):
    n, d = 20, 12
    t = rng.normal(size=n)
    X = 1.0 + np.outer(t, rng.normal(size=d))
    ids = [f"s{i}" for i in range(n)]
    root = tmp_path / "rank1"
    root.mkdir()
    save_spectra_csv(root / "p.csv", SpectraMatrix(X, None, ids))
    save_spectra_csv(root / "s.csv", SpectraMatrix(X + 0.01, None, ids))
    save_responses_csv(root / "y.csv", ["y"], (t + 0.1 * rng.normal(size=n))[:, None], ids)
    save_spectra_csv(root / "sp.csv", SpectraMatrix(rng.normal(size=(2, d))))
    save_spectra_csv(root / "ss.csv", SpectraMatrix(rng.normal(size=(2, d))))
    files = {"primary_spectra": "p.csv", "secondary_spectra": "s.csv", "responses": "y.csv",
             "primary_standards": "sp.csv", "secondary_standards": "ss.csv"}
    write_manifest(root / "manifest.json", {
        "name": "rank1", "files": files, "response_names": ["y"],
        "checksums": {f: sha256_file(root / f) for f in files.values()}})
    assert main(["transfer-eval", "--manifest", str(root / "manifest.json"), "--method", "pls",
                 "--out", str(tmp_path / "o")]) == 3
    assert "numerical error" in capsys.readouterr().err
