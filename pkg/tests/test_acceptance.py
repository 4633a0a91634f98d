"""Acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
quantity and the elapsed time. Run alone with::

    pytest tests/test_acceptance.py -v

The corn reproduction runs only when converted corn tables are available,
via ``SPECTRAL_TRANSFER_CORN_MANIFEST`` or ``data/corn/manifest.json``.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest
from oracles import gradient_descent, random_problem, rel_err

from spectral_transfer.baselines import apply_transfer, direct_standardization, fit_pls, fit_pls_reference
from spectral_transfer.cli import main
from spectral_transfer.dataio import synth_two_instrument
from spectral_transfer.gctpls import (
    FitConfig,
    fit,
    objective_and_gradient,
    predict,
    reconstruct,
    solve_weights,
    standards_score_gap,
)
from spectral_transfer.graphreg import StandardsPair, build_graph, regularizer
from spectral_transfer.sampling import rmsep

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture
def report(capsys):
    """Print one verdict line per criterion, visible without ``-s``."""
    start = time.perf_counter()

    def emit(number, ok, detail, budget):
        elapsed = time.perf_counter() - start
        ok = bool(ok) and elapsed < budget
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  "
                  f"[{elapsed:.2f}s / {budget:g}s]")
        return ok

    return emit


def test_criterion_01_closed_form_optimality(report):
    rng = np.random.default_rng(1)
    worst_err, worst_grad = 0.0, 0.0
    for gamma in (0.0, 1.0, 100.0, 1e4):
        for _ in range(5):
            X, y, std = random_problem(rng, n=10, d=8, K=2)
            reg = regularizer(std)
            w = solve_weights(X, y, reg, gamma)
            scale = np.linalg.norm(X.T @ y)
            ref = gradient_descent(lambda v: objective_and_gradient(v, X, y, reg, gamma),
                                   np.zeros(8))
            worst_err = max(worst_err, rel_err(w, ref))
            grad = objective_and_gradient(w, X, y, reg, gamma)[1]
            worst_grad = max(worst_grad, np.linalg.norm(grad) / scale)
    assert report(1, worst_err <= 1e-5 and worst_grad <= 1e-8,
                  f"max rel err vs gradient descent {worst_err:.2e} (tol 1e-5), "
                  f"max |grad|/|X'y| {worst_grad:.2e} (tol 1e-8)", 1.0)


def test_criterion_02_gradient_finite_differences(report):
    rng = np.random.default_rng(2)
    h = 1e-6
    worst = 0.0
    for _ in range(10):
        X, y, std = random_problem(rng, n=6, d=5, K=2)
        reg = regularizer(std)
        gamma = float(rng.uniform(0.0, 10.0))
        w = rng.normal(size=5)
        g = objective_and_gradient(w, X, y, reg, gamma)[1]
        fd = np.array([(objective_and_gradient(w + h * e, X, y, reg, gamma)[0]
                        - objective_and_gradient(w - h * e, X, y, reg, gamma)[0]) / (2 * h)
                       for e in np.eye(5)])
        worst = max(worst, rel_err(g, fd))
    assert report(2, worst <= 1e-6, f"max rel err {worst:.2e} (tol 1e-6)", 1.0)


def test_criterion_03_gamma_zero_is_nipals(report):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 20)) + 1.0
    y = X[:, :5] @ rng.normal(size=5) + 0.1 * rng.normal(size=30)
    Xt = rng.normal(size=(10, 20)) + 1.0
    worst = 0.0
    for A in (1, 2, 3):
        model = fit(X, y, None, FitConfig(gamma=0.0, n_components=A))
        ref = fit_pls_reference(X, y, A)
        worst = max(worst, rel_err(predict(model, X), predict(ref, X)),
                    rel_err(predict(model, Xt), predict(ref, Xt)))
    assert report(3, worst <= 1e-8, f"max rel prediction diff {worst:.2e} (tol 1e-8)", 1.0)


def test_criterion_04_graph_algebra(report):
    rng = np.random.default_rng(4)
    eig_err, gamma_err, j_err = 0.0, 0.0, 0.0
    for K in (1, 3, 5):
        ev = np.linalg.eigvalsh(build_graph(K).L)
        eig_err = max(eig_err, float(np.max(np.minimum(np.abs(ev), np.abs(ev - 2.0)))))
        for d in (4, 50):
            Xp, Xs = rng.normal(size=(K, d)), rng.normal(size=(K, d))
            reg = regularizer(StandardsPair(Xp, Xs))
            G = (Xp - Xs).T @ (Xp - Xs)
            gamma_err = max(gamma_err, rel_err(reg.dense, G))
            w = rng.normal(size=d)
            nodes = np.vstack([Xp, Xs]) @ w
            A = build_graph(K).A
            J = 0.5 * sum(A[i, j] * (nodes[i] - nodes[j]) ** 2
                          for i in range(2 * K) for j in range(2 * K))
            j_err = max(j_err, abs(J - w @ reg.dense @ w) / J)
    ok = eig_err <= 1e-10 and gamma_err <= 1e-12 and j_err <= 1e-10
    assert report(4, ok, f"eig dev {eig_err:.1e}, Gamma rel err {gamma_err:.1e}, "
                         f"J rel err {j_err:.1e}", 1.0)


def test_criterion_05_dense_woodbury_agreement(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    X, y, std = random_problem(rng, n=60, d=700, K=3)
    reg = regularizer(std)
    for gamma in (1.0, 1e2, 1e4):
        worst = max(worst, rel_err(solve_weights(X, y, reg, gamma, method="woodbury"),
                                   solve_weights(X, y, reg, gamma, method="dense")))
    data = synth_two_instrument(n_samples=60, d=700, K=3, shift_spec="offset=0.5", seed=5)
    Xc, yc = data.x_cal - data.x_cal.mean(0), data.y_cal - data.y_cal.mean()
    reg = regularizer(data.standards)
    for gamma in (1.0, 1e2, 1e4, 1e6):
        worst = max(worst, rel_err(solve_weights(Xc, yc, reg, gamma, method="woodbury"),
                                   solve_weights(Xc, yc, reg, gamma, method="dense")))
    assert report(5, worst <= 1e-9, f"max rel diff {worst:.2e} (tol 1e-9)", 1.0)


def test_criterion_06_alignment(report):
    data = synth_two_instrument(shift_spec="offset=0.5", seed=0)
    gaps, recon = {}, {}
    for gamma in (0.0, 1e6):
        model = fit(data.x_cal, data.y_cal, data.standards, FitConfig(gamma=gamma, n_components=2))
        gaps[gamma] = standards_score_gap(model)
        recon[gamma] = np.linalg.norm(reconstruct(model, data.x_cal, 2).mean(axis=0)
                                      - reconstruct(model, data.x_val, 2).mean(axis=0))
    ratio = gaps[1e6] / gaps[0.0]
    shrink = recon[0.0] / recon[1e6]
    assert report(6, ratio <= 0.1 and shrink >= 5.0,
                  f"score gap ratio {ratio:.2e} (<= 0.1), reconstruction gap shrink "
                  f"{shrink:.1f}x (>= 5)", 2.0)


def _diagnose(tmp_path, capsys, name, K, shift):
    out = tmp_path / name
    assert main(["synth", "--out", str(out), "--n-standards", str(K), "--shift", shift]) == 0
    capsys.readouterr()
    assert main(["diagnose", "--manifest", str(out / "manifest.json"), "--out", str(out / "d")]) == 0
    text = capsys.readouterr().out
    return text.split("flagged_lv=")[1].split()[0]


def test_criterion_07_residual_diagnostic(report, tmp_path, capsys):
    single = _diagnose(tmp_path, capsys, "single", 1, "offset=0.5")
    double = _diagnose(tmp_path, capsys, "double", 2, "offset=0.5,gain=0.2")
    assert report(7, single == "1" and double == "2",
                  f"single offset flags {single} (want 1), two-direction shift flags "
                  f"{double} (want 2)", 2.0)


def _corn_manifest():
    env = os.environ.get("SPECTRAL_TRANSFER_CORN_MANIFEST")
    path = Path(env) if env else REPO / "data" / "corn" / "manifest.json"
    return path if path.exists() else None


@pytest.mark.corn
def test_criterion_08_corn_reproduction(report, tmp_path, capsys):
    manifest = _corn_manifest()
    if manifest is None:
        with capsys.disabled():
            print("\ncriterion 8: SKIP  corn tables not found; convert corn.mat with "
                  "scripts/convert_corn.py and set SPECTRAL_TRANSFER_CORN_MANIFEST")
        pytest.skip("corn data not available")
    import csv

    def summary(out, *args):
        assert main(["transfer-eval", "--manifest", str(manifest), "--method", "gct,pls",
                     "--out", str(out), *args]) == 0
        with open(out / "rmsep_summary.csv", newline="") as fh:
            return list(csv.DictReader(fh))

    rows = summary(tmp_path / "m5mp6", "--pair", "m5:mp6", "--response", "moisture")
    gct = float(rows[0]["rmsep_secondary"])
    pls_sec = float(rows[1]["rmsep_secondary"])
    pls_pri = float(rows[1]["rmsep_primary"])
    ok = abs(gct - 0.21) <= 0.05 and abs(pls_sec - 0.61) <= 0.10 and abs(pls_pri - 0.20) <= 0.05

    qual = True
    for pair in ("m5:mp6", "mp6:m5"):
        rows = summary(tmp_path / pair.replace(":", "_"), "--pair", pair, "--response", "all")
        by = {(r["response"], r["method"]): r for r in rows}
        for resp in ("moisture", "oil", "protein", "starch"):
            g = float(by[(resp, "GCT-PLS")]["rmsep_secondary"])
            p = by[(resp, "PLS")]
            qual &= g < float(p["rmsep_secondary"])
            if resp in ("moisture", "oil"):
                qual &= g <= 1.5 * float(p["rmsep_primary"])
    assert report(8, ok and qual,
                  f"GCT {gct:.3f} (0.21+-0.05), PLS mp6 {pls_sec:.3f} (0.61+-0.10), "
                  f"PLS m5 {pls_pri:.3f} (0.20+-0.05), qualitative {'ok' if qual else 'violated'}",
                  30.0)


def test_criterion_09_direct_standardization(report):
    rng = np.random.default_rng(9)
    interp = 0.0
    for K, d in ((3, 20), (5, 100)):
        std = StandardsPair(rng.normal(size=(K, d)), rng.normal(size=(K, d)))
        interp = max(interp, rel_err(apply_transfer(direct_standardization(std), std.Xp), std.Xs))
    data = synth_two_instrument(shift_spec="offset=0.5", seed=9)
    tmap = direct_standardization(data.standards)
    ds = fit_pls(apply_transfer(tmap, data.x_cal), data.y_cal, 2)
    gct = fit(data.x_cal, data.y_cal, data.standards, FitConfig(gamma=1e6, n_components=2))
    ds_err = rmsep(data.y_val, predict(ds, data.x_val))
    gct_err = rmsep(data.y_val, predict(gct, data.x_val))
    assert report(9, interp <= 1e-8 and ds_err > gct_err,
                  f"Xp F vs Xs rel err {interp:.1e} (tol 1e-8), RMSEP DS+PLS {ds_err:.3g} "
                  f"> GCT-PLS {gct_err:.3g}", 2.0)


def test_criterion_10_cli_determinism(report, tmp_path):
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["synth", "--out", str(out / "data"), "--seed", "10"]) == 0
        manifest = str(out / "data" / "manifest.json")
        assert main(["transfer-eval", "--manifest", manifest, "--out", str(out / "eval")]) == 0
        assert main(["sweep", "--manifest", manifest, "--out", str(out / "sweep")]) == 0
        assert main(["diagnose", "--manifest", manifest, "--out", str(out / "diag")]) == 0
        runs.append({p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    same = runs[0] == runs[1]
    assert report(10, same and len(runs[0]) > 10,
                  f"{len(runs[0])} files, byte-identical: {same}", 5.0)
