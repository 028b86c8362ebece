"""Run a grid of (missing kind, rate, model) cells and persist the results.

Outputs in the output directory:

* ``table.csv`` / ``table.json``: the sweep table, byte-identical for the same config.
* ``manifest.json``: resolved config, derived seeds, library version, wall-times
  and per-cell status.  Cells already marked complete are skipped on rerun
  unless ``force`` is set.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..amputation import MissingnessSpec, amputate, count_unique_missing_patterns
from ..baselines import run_baseline
from ..data import DataMatrix, SplitSpec, read_csv, split_indices
from ..errors import BudgetError, DataError
from ..evaluation import SweepTable, nested_cv_classify, score_imputation
from ..mice import fit_transform, transform
from .config import ExperimentConfig, ModelSpec
from .registry import complete_rows, load_dataset

log = logging.getLogger(__name__)


def derive_seed(master: int, *parts) -> int:
    """64-bit seed from the master seed and a purpose path; stable across runs and platforms."""
    text = json.dumps([int(master), *[str(p) for p in parts]], separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def cell_id(kind: str, rate_pct: int, model: str) -> str:
    return f"{kind}/{rate_pct}/{model}"


def load_experiment_data(cfg: ExperimentConfig):
    ds = cfg.dataset
    if ds.path is None:
        data, labels = load_dataset(ds.name, cfg.data_dir)
    else:
        data, labels = read_csv(ds.path, ds.target, delimiter=ds.delimiter, header=ds.header,
                                na_tokens=ds.na_tokens, drop_columns=ds.drop_columns)
    if not data.is_complete():
        before = data.n
        data, labels = complete_rows(data, labels)
        log.warning("%s: kept %d complete rows of %d", ds.name, data.n, before)
        if data.n < 2:
            raise DataError("fewer than two complete rows to amputate")
    return data, labels


@dataclass
class SweepOutcome:
    table: SweepTable
    manifest: dict
    ran: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failed: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not self.failed and not self.manifest.get("stopped_early")

    @property
    def exit_code(self) -> int:
        return 0 if self.complete else 2


def _impute_pair(spec: ModelSpec, train_am, test_am, seed, cfg: ExperimentConfig):
    if spec.is_mice:
        mcfg = replace(spec.mice, seed=seed % 2**63, max_fits=cfg.max_fits_per_cell)
        model, train_imp = fit_transform(train_am, mcfg)
        return train_imp, transform(model, test_am)
    return run_baseline(train_am, spec.baseline, seed).data, run_baseline(test_am, spec.baseline, seed).data


def _score_or_none(actual, imputed, amputated):
    if amputated.is_complete():
        return None
    return score_imputation(actual, imputed, amputated.mask)


def run_cell(cfg: ExperimentConfig, data: DataMatrix, labels, tr, te, kind: str, rate_pct: int,
             spec: ModelSpec) -> dict:
    ds = cfg.dataset.name
    train, test = data.take_rows(tr), data.take_rows(te)
    rate = rate_pct / 100.0
    train_am = amputate(train, MissingnessSpec(kind, rate, derive_seed(cfg.seed, "amputate", ds, kind, rate_pct, "train") % 2**63))
    test_am = amputate(test, MissingnessSpec(kind, rate, derive_seed(cfg.seed, "amputate", ds, kind, rate_pct, "test") % 2**63))
    seed = derive_seed(cfg.seed, "model", ds, kind, rate_pct, spec.name)
    train_imp, test_imp = _impute_pair(spec, train_am, test_am, seed, cfg)
    rec = {"patterns_train": count_unique_missing_patterns(train_am),
           "patterns_test": count_unique_missing_patterns(test_am)}
    for split, actual, imp, am in (("train", train, train_imp, train_am), ("test", test, test_imp, test_am)):
        s = _score_or_none(actual, imp, am)
        if s is not None:
            rec |= {f"{split}_rmse": s.rmse, f"{split}_nrmse": s.nrmse, f"{split}_cells": s.n_cells}
    if cfg.classify and labels is not None:
        full = np.empty(data.shape)
        full[tr], full[te] = train_imp.values, test_imp.values
        cv = nested_cv_classify(full, labels, cfg.cv_grid, n_outer=cfg.cv_outer, n_inner=cfg.cv_inner,
                                seed=derive_seed(cfg.seed, "cv", ds, kind, rate_pct, spec.name) % 2**32)
        rec |= {"cv_mean": cv.mean_accuracy, "cv_std": cv.std_accuracy}
    return rec


def _read_existing(out: Path):
    mpath, tpath = out / "manifest.json", out / "table.json"
    if not (mpath.is_file() and tpath.is_file()):
        return None, None
    return json.loads(mpath.read_text(encoding="utf-8")), SweepTable.from_json(tpath.read_text(encoding="utf-8"))


def write_outputs(out: Path, table: SweepTable, manifest: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.csv").write_text(table.to_csv(), encoding="utf-8")
    (out / "table.json").write_text(table.to_json(), encoding="utf-8")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def run_sweep(cfg: ExperimentConfig, *, out=None, jobs: int = 1, force: bool = False) -> SweepOutcome:
    out = Path(out or cfg.out)
    resolved = cfg.to_dict()
    data, labels = load_experiment_data(cfg)
    tr, te = split_indices(data.n, SplitSpec(cfg.train_fraction, derive_seed(cfg.seed, "split", cfg.dataset.name)))

    manifest, table = (None, None) if force else _read_existing(out)
    if manifest is not None and manifest.get("config") != resolved:
        log.warning("existing manifest was written for a different config; recomputing everything")
        manifest, table = None, None
    if manifest is None:
        manifest, table = {"cells": {}}, SweepTable()
    manifest.update({
        "config": resolved,
        "library_version": __version__,
        "seeds": {"master": cfg.seed, "split": derive_seed(cfg.seed, "split", cfg.dataset.name)},
        "data_shape": list(data.shape),
        "split_sizes": [int(tr.size), int(te.size)],
        "stopped_early": False,
    })
    cells = manifest["cells"]
    ds = cfg.dataset.name
    todo, outcome = [], SweepOutcome(table, manifest)
    for kind in cfg.kinds:
        for rate in cfg.rates:
            for spec in cfg.models:
                cid = cell_id(kind, rate, spec.name)
                if cells.get(cid, {}).get("status") == "complete" and (ds, kind, rate, spec.name) in table:
                    outcome.skipped.append(cid)
                else:
                    todo.append((cid, kind, rate, spec))

    start = time.perf_counter()

    def job(item):
        cid, kind, rate, spec = item
        if cfg.max_seconds is not None and time.perf_counter() - start > cfg.max_seconds:
            return cid, None, "time budget exhausted before start", 0.0
        t0 = time.perf_counter()
        try:
            return cid, run_cell(cfg, data, labels, tr, te, kind, rate, spec), None, time.perf_counter() - t0
        except BudgetError as exc:
            return cid, None, str(exc), time.perf_counter() - t0

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(job, todo))
    else:
        results = [job(item) for item in todo]

    # single writer, in grid order
    for (cid, kind, rate, spec), (_, rec, err, secs) in zip(todo, results):
        if err is None:
            table.put(ds, kind, rate, spec.name, **rec)
            cells[cid] = {"status": "complete", "wall_seconds": round(secs, 3)}
            outcome.ran.append(cid)
        else:
            cells[cid] = {"status": "failed", "reason": err}
            outcome.failed[cid] = err
            manifest["stopped_early"] = manifest["stopped_early"] or "time budget" in err
    manifest["skipped_last_run"] = len(outcome.skipped)
    write_outputs(out, table, manifest)
    return outcome
