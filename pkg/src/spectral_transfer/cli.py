"""Command-line driver.

Subcommands: ``synth``, ``fit``, ``predict``, ``transfer-eval``, ``sweep``
and ``diagnose``. Exit codes: 0 success, 2 usage or input error, 3
numerical failure. ``SPECTRAL_TRANSFER_LOG`` (error|info|debug) sets the
log level.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    ShiftSpec,
    emit_result_tables,
    load_dataset,
    load_manifest,
    load_spectra_csv,
    synth_two_instrument,
    write_synthetic_dataset,
    write_table,
)
from .errors import InputError, NumericalError
from .experiment import (
    METHOD_LABELS,
    StandardsMode,
    resolve_standards,
    run_method,
    split_dataset,
    sweep_row,
)
from .gctpls import flag_transferable_lv, predict
from .serialization import load_model, save_model

logger = logging.getLogger("spectral_transfer")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
DEFAULT_GAMMA_GRID = "0,1e2,1e4,1e6"


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _non_negative(text: str) -> float:
    value = float(text)
    if not np.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"must be a non-negative number, got {text!r}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text!r}")
    return value


def _methods(text: str) -> list[str]:
    items = [m.strip().lower() for m in text.split(",") if m.strip()]
    if items == ["all"]:
        return list(METHOD_LABELS)
    bad = [m for m in items if m not in METHOD_LABELS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"methods must be from {sorted(METHOD_LABELS)}, got {text!r}")
    return items


def _dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True, type=Path, help="dataset manifest (JSON)")
    p.add_argument("--response", default=None,
                   help="response name, or 'all' (default: first response in the manifest)")
    p.add_argument("--pair", action="append", default=None, metavar="PRIMARY:SECONDARY",
                   help="instrument pair; repeatable; 'all' runs the manifest's scenarios")
    p.add_argument("--n-cal", type=_positive_int, default=None,
                   help="Kennard-Stone calibration size (default: 75%% of the samples)")
    p.add_argument("--standards", default="external", help="'external' or 'ks:N'")
    p.add_argument("--center-standards", action="store_true")
    p.add_argument("--lv", type=_positive_int, default=2, help="number of latent variables")
    p.add_argument("--seed", type=int, default=0, help="accepted for reproducible batch configs")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=_non_negative, default=1e6, help="alignment penalty weight")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-transfer",
                                     description="Graph-regularized PLS calibration transfer.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic two-instrument dataset")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--n-samples", type=_positive_int, default=60, help="calibration-sized sample count")
    p.add_argument("--n-val", type=_positive_int, default=20)
    p.add_argument("--channels", type=_positive_int, default=200)
    p.add_argument("--n-standards", type=_positive_int, default=3)
    p.add_argument("--shift", default="offset=0.5", help="e.g. 'offset=0.5,gain=0.2,shift=1'")
    p.add_argument("--noise", type=_non_negative, default=1e-4)
    p.add_argument("--standards-spread", type=_non_negative, default=0.5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("fit", help="fit a model on the calibration split and save it")
    _dataset_args(p)
    _model_args(p)
    p.add_argument("--method", type=_methods, default=["gct"], help="gct or pls")
    p.add_argument("--out", required=True, type=Path, help="model JSON path")

    p = sub.add_parser("predict", help="predict responses for spectra with a saved model")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--spectra", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="predictions CSV path")

    p = sub.add_parser("transfer-eval", help="full transfer evaluation with result tables")
    _dataset_args(p)
    _model_args(p)
    p.add_argument("--method", type=_methods, default=list(METHOD_LABELS),
                   help="comma list of gct, pls, ds (default: all)")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("sweep", help="RMSEP and standards score mismatch over a gamma grid")
    _dataset_args(p)
    p.add_argument("--gamma-grid", type=_float_list, default=_float_list(DEFAULT_GAMMA_GRID))
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("diagnose", help="standards residual norms per latent variable")
    _dataset_args(p)
    _model_args(p)
    p.add_argument("--threshold", type=_non_negative, default=0.01,
                   help="fraction of the initial cross-instrument norm (default 0.01)")
    p.add_argument("--out", required=True, type=Path)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("SPECTRAL_TRANSFER_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _scenarios(args, manifest):
    pairs = args.pair or [None]
    if pairs == ["all"]:
        if not manifest.scenarios:
            raise InputError("manifest lists no scenarios")
        pairs = [f"{p}:{s}" for p, s in manifest.scenarios]
    names = manifest.response_names
    if args.response is None:
        responses = [names[0]]
    elif args.response == "all":
        responses = list(names)
    else:
        responses = [args.response]
    for pair in pairs:
        if pair is None:
            primary = secondary = None
        else:
            primary, sep, secondary = pair.partition(":")
            if not sep or not primary or not secondary:
                raise InputError(f"--pair must look like PRIMARY:SECONDARY, got {pair!r}")
        dataset = load_dataset(manifest, primary, secondary)
        split = split_dataset(dataset, args.n_cal)
        standards = resolve_standards(dataset, split, StandardsMode.parse(args.standards))
        for response in responses:
            yield dataset, split, standards, response


def cmd_synth(args) -> int:
    data = synth_two_instrument(args.n_samples, args.channels, args.n_standards,
                                ShiftSpec.parse(args.shift), args.noise, args.seed,
                                n_val=args.n_val, standards_spread=args.standards_spread)
    path = write_synthetic_dataset(data, args.out)
    print(path)
    return EXIT_OK


def cmd_fit(args) -> int:
    manifest = load_manifest(args.manifest)
    method = args.method[0]
    if len(args.method) != 1 or method == "ds":
        raise InputError("fit takes a single --method, gct or pls")
    dataset, split, standards, response = next(iter(_scenarios(args, manifest)))
    _, model = run_method(dataset, split, response, method, standards, args.gamma, args.lv,
                          args.center_standards)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_model(args.out, model)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    spectra = load_spectra_csv(args.spectra)
    y = predict(model, spectra.values)
    ids = spectra.sample_ids or [str(i) for i in range(len(y))]
    write_table(args.out, ["sample", "y_pred"], zip(ids, (float(v) for v in y)))
    return EXIT_OK


def cmd_transfer_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    results = []
    for dataset, split, standards, response in _scenarios(args, manifest):
        for method in args.method:
            result, _ = run_method(dataset, split, response, method, standards, args.gamma,
                                   args.lv, args.center_standards)
            results.append(result)
    emit_result_tables(results, args.out)
    for res in results:
        print(f"{res.label}\tRMSEP_secondary={res.rmsep_secondary:.6g}\t"
              f"RMSEP_primary={res.rmsep_primary:.6g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    manifest = load_manifest(args.manifest)
    results, rows = [], []
    for dataset, split, standards, response in _scenarios(args, manifest):
        for gamma in args.gamma_grid:
            result, model = run_method(dataset, split, response, "gct", standards, gamma,
                                       args.lv, args.center_standards)
            results.append(result)
            row = sweep_row(result, model)
            rows.append([result.primary, result.secondary, response, row.gamma, args.lv,
                         row.rmsep_secondary, row.rmsep_primary, row.score_mismatch,
                         row.reconstruction_gap])
    emit_result_tables(results, args.out)
    write_table(args.out / "sweep.csv",
                ["primary", "secondary", "response", "gamma", "n_lv", "rmsep_secondary",
                 "rmsep_primary", "score_mismatch", "reconstruction_gap"], rows)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    manifest = load_manifest(args.manifest)
    rows = []
    for dataset, split, standards, response in _scenarios(args, manifest):
        _, model = run_method(dataset, split, response, "gct", standards, args.gamma, args.lv,
                              args.center_standards)
        flagged = flag_transferable_lv(model.residuals, args.threshold)
        initial = model.residuals[0].cross_norm
        for res in model.residuals:
            rel = res.cross_norm / initial if initial > 0 else 0.0
            rows.append([dataset.primary_label, dataset.secondary_label, response, res.component,
                         res.primary_norm, res.secondary_norm, res.cross_norm, rel,
                         "yes" if flagged == res.component else "no"])
        print(f"{dataset.primary_label}->{dataset.secondary_label} {response}\t"
              f"flagged_lv={'none' if flagged is None else flagged}")
    write_table(args.out / "diagnose.csv",
                ["primary", "secondary", "response", "lv", "primary_norm", "secondary_norm",
                 "cross_norm", "relative_cross_norm", "flagged"], rows)
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "transfer-eval": cmd_transfer_eval,
    "sweep": cmd_sweep,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
