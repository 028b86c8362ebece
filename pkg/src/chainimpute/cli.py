"""Command line front-end.

Exit codes: 0 complete, 2 partial (budget hit or report gaps), 1 error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .amputation import MissingnessSpec, amputate, count_unique_missing_patterns
from .baselines import run_baseline
from .data import read_csv, read_mask_csv, write_csv, write_mask_csv
from .errors import BudgetError, ImputeError
from .evaluation import nested_cv_classify, score_imputation
from .experiment.config import load_config, parse_model
from .experiment.report import emit_report
from .experiment.sweep import run_sweep
from .mice import fit_transform, load_model, save_model, transform

log = logging.getLogger("chainimpute")

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--force", action="store_true", help="recompute completed sweep cells")
    return p


def _csv_args(p):
    p.add_argument("--input", type=Path, required=True, help="input CSV (header row)")
    p.add_argument("--target", default=None, help="classification target column, passed through")
    p.add_argument("--delimiter", default=",")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="chainimpute", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="amputate a complete CSV")
    _csv_args(p)
    p.add_argument("--kind", choices=["mcar", "mar", "mnar"], required=True)
    p.add_argument("--rate", type=float, required=True, help="fraction in (0, 0.95] or percent (>1)")

    p = sub.add_parser("impute", parents=[common], help="impute a CSV with a baseline or a MICE variant")
    _csv_args(p)
    p.add_argument("--model", default=None, help="median|knn|isvd|mf or e.g. LR-MICE, GB-MICE+MCMV")

    p = sub.add_parser("transform", parents=[common], help="impute new rows with a saved MICE model")
    _csv_args(p)
    p.add_argument("--model-file", type=Path, required=True)

    p = sub.add_parser("evaluate", parents=[common], help="score an imputation, optionally classify")
    p.add_argument("--actual", type=Path, required=True)
    p.add_argument("--imputed", type=Path, required=True)
    p.add_argument("--mask", type=Path, required=True, help="0/1 mask CSV written by simulate")
    p.add_argument("--target", default=None, help="label column, kept out of the score")
    p.add_argument("--classify", action="store_true", help="run nested-CV classification on --target")
    p.add_argument("--delimiter", default=",")

    sub.add_parser("sweep", parents=[common], help="run an experiment grid from --config")
    sub.add_parser("report", parents=[common], help="render tables from a sweep directory (--out)")
    return parser


def _out(args, default="out") -> Path:
    out = args.out or Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def cmd_simulate(args) -> int:
    data, labels = read_csv(args.input, args.target, delimiter=args.delimiter)
    rate = args.rate / 100.0 if args.rate > 1 else args.rate
    am = amputate(data, MissingnessSpec(args.kind, rate, _seed(args)))
    out = _out(args)
    write_csv(out / "amputated.csv", am, labels, args.target or "target")
    write_mask_csv(out / "mask.csv", am)
    print(f"masked {am.n_missing} of {am.mask.size} cells; {count_unique_missing_patterns(am)} unique patterns")
    return EXIT_OK


def _model_spec(args):
    if args.config is not None:
        return parse_model(json.loads(args.config.read_text(encoding="utf-8")))
    if args.model is None:
        raise ImputeError("give --model or --config")
    return parse_model(args.model)


def cmd_impute(args) -> int:
    data, labels = read_csv(args.input, args.target, delimiter=args.delimiter)
    spec = _model_spec(args)
    out = _out(args)
    seed = _seed(args)
    if spec.is_mice:
        model, imputed = fit_transform(data, replace(spec.mice, seed=seed), jobs=args.jobs)
        save_model(model, out / "model.json")
    else:
        imputed = run_baseline(data, spec.baseline, seed).data
    write_csv(out / "imputed.csv", imputed, labels, args.target or "target")
    print(f"{spec.name}: imputed {data.n_missing} cells -> {out / 'imputed.csv'}")
    return EXIT_OK


def cmd_transform(args) -> int:
    data, labels = read_csv(args.input, args.target, delimiter=args.delimiter)
    model = load_model(args.model_file)
    out = _out(args)
    write_csv(out / "imputed.csv", transform(model, data, jobs=args.jobs), labels, args.target or "target")
    print(f"imputed {data.n_missing} cells -> {out / 'imputed.csv'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    actual, labels = read_csv(args.actual, args.target, delimiter=args.delimiter)
    imputed, _ = read_csv(args.imputed, args.target, delimiter=args.delimiter)
    mask = read_mask_csv(args.mask)
    score = score_imputation(actual, imputed, mask)
    result = {"rmse": score.rmse, "nrmse": score.nrmse, "n_cells": score.n_cells}
    if args.classify:
        if args.target is None:
            raise ImputeError("--classify needs --target")
        cv = nested_cv_classify(imputed, labels, seed=_seed(args))
        result |= {"cv_mean": cv.mean_accuracy, "cv_std": cv.std_accuracy, "cv_folds": cv.n_outer}
    text = json.dumps(result, indent=1, sort_keys=True)
    print(text)
    if args.out is not None:
        (_out(args) / "score.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config is None:
        raise ImputeError("sweep needs --config")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    outcome = run_sweep(cfg, out=args.out, jobs=args.jobs, force=args.force)
    if outcome.skipped:
        n = len(outcome.skipped)
        print(f"skipped {n} completed cell{'s' if n != 1 else ''}")
    print(f"ran {len(outcome.ran)} cell(s); {len(outcome.failed)} failed")
    for cid, why in outcome.failed.items():
        print(f"  {cid}: {why}", file=sys.stderr)
    return outcome.exit_code


def cmd_report(args) -> int:
    out = args.out
    if out is None and args.config is not None:
        out = Path(load_config(args.config).out)
    if out is None:
        raise ImputeError("report needs --out (the sweep directory) or --config")
    res = emit_report(out)
    print(f"wrote {', '.join(res.files)} in {out}")
    if res.gaps:
        print(f"{len(res.gaps)} cell(s) missing", file=sys.stderr)
    return res.exit_code


COMMANDS = {"simulate": cmd_simulate, "impute": cmd_impute, "transform": cmd_transform,
            "evaluate": cmd_evaluate, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except (ImputeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
