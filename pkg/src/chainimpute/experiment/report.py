"""Markdown tables and plot series from sweep outputs."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CoverageError
from ..evaluation import SweepTable, sum_nrmse, vote_best_model


@dataclass
class ReportResult:
    markdown: str
    files: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    best: dict = field(default_factory=dict)
    exit_code: int = 0


def _fmt(v, digits=4):
    return "" if v is None else f"{v:.{digits}f}"


def _group_table(table, ds, kind, models, rates):
    """One table per (dataset, kind): test/train NRMSE (and accuracy) per model, plus a sum row."""
    has_cv = any((table.get(ds, kind, r, m) or {}).get("cv_mean") is not None for r in rates for m in models)
    metrics = [("test_nrmse", "test"), ("train_nrmse", "train")] + ([("cv_mean", "acc")] if has_cv else [])
    head = [f"{m} {label}" for m in models for _, label in metrics]
    lines = ["| rate % | " + " | ".join(head) + " |", "|---" * (len(head) + 1) + "|"]
    for r in rates:
        cells = []
        for m in models:
            rec = table.get(ds, kind, r, m) or {}
            cells += ["n/a" if rec.get(key) is None else _fmt(rec[key]) for key, _ in metrics]
        lines.append(f"| {r} | " + " | ".join(cells) + " |")
    sums = []
    for m in models:
        try:
            total = _fmt(sum_nrmse(table, ds, kind, m))
        except CoverageError:
            total = "n/a"
        sums += [total] + [""] * (len(metrics) - 1)
    lines.append("| sum | " + " | ".join(sums) + " |")
    return lines


def _series_csv(table, ds, kind, models, rates):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rate_pct", "model", "test_nrmse", "train_nrmse", "patterns_train"])
    for m in models:
        for r in rates:
            rec = table.get(ds, kind, r, m)
            if rec is None:
                continue
            w.writerow([r, m] + ["" if rec.get(c) is None else repr(rec[c])
                                 for c in ("test_nrmse", "train_nrmse", "patterns_train")])
    return buf.getvalue()


def emit_report(out_dir) -> ReportResult:
    """Write ``report.md`` and ``series_<dataset>_<kind>.csv`` next to the sweep outputs.

    Exit code 0 when every configured cell is present, 2 when the table is
    empty or has gaps.
    """
    out = Path(out_dir)
    tpath, mpath = out / "table.json", out / "manifest.json"
    table = SweepTable.from_json(tpath.read_text(encoding="utf-8")) if tpath.is_file() else SweepTable()
    manifest = json.loads(mpath.read_text(encoding="utf-8")) if mpath.is_file() else {}
    cfg = manifest.get("config", {})

    md = ["# Imputation sweep report", ""]
    res = ReportResult("")
    if not len(table):
        md += ["_No completed cells._", ""]
        res.exit_code = 2
    expected = []
    if cfg:
        ds = cfg["dataset"]["name"]
        expected = [(ds, k, r, m["name"]) for k in cfg["kinds"] for r in cfg["rates"] for m in cfg["models"]]
    res.gaps = [key for key in expected if key not in table]
    reasons = {cid: c.get("reason", "failed") for cid, c in manifest.get("cells", {}).items()
               if c.get("status") != "complete"}

    for ds, kind in table.groups():
        models = table.models(ds, kind)
        rates = sorted({k[2] for k in table.keys() if k[0] == ds and k[1] == kind})
        md += [f"## {ds} / {kind.upper()}", "",
               "NRMSE on the held-out (test) and fitted (train) splits; the sum row needs all nine rates.", ""]
        md += _group_table(table, ds, kind, models, rates) + [""]
        try:
            best = vote_best_model(table, ds, kind, models)
            res.best[f"{ds}/{kind}"] = best
            md += [f"Best model by per-rate vote: **{best}**", ""]
        except CoverageError as exc:
            md += [f"Best model vote unavailable: {exc}", ""]
        name = f"series_{ds}_{kind}.csv"
        (out / name).write_text(_series_csv(table, ds, kind, models, rates), encoding="utf-8")
        res.files.append(name)

    if res.gaps:
        res.exit_code = 2
        md += ["## Gaps", ""]
        for ds, k, r, m in res.gaps:
            md.append(f"- {ds} / {k} / {r}% / {m}: {reasons.get(f'{k}/{r}/{m}', 'not computed')}")
        md.append("")
    if cfg:
        md += ["## Resolved configuration", "", "```json", json.dumps(cfg, indent=1, sort_keys=True), "```", ""]
    res.markdown = "\n".join(md)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.md").write_text(res.markdown, encoding="utf-8")
    res.files.insert(0, "report.md")
    if res.best:
        (out / "best_models.json").write_text(json.dumps(res.best, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        res.files.append("best_models.json")
    return res
