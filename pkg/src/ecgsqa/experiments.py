"""Experiment drivers behind the CLI: pipeline, within, cross and window sweep.

Every driver writes canonical JSON reports plus a plot-ready CSV and an
aligned text table under the run's output directory. Output bytes depend
only on the config and seed.
"""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import ConfigError, DataError
from .ml.metrics import METRIC_NAMES, MetricsReport, format_table
from .ml.validation import cross_eval, cross_validate
from .pipeline import count_summary, extract_record
from .signal_io import (
    FeatureTable,
    load_dataset,
    load_feature_table,
    save_feature_table,
    save_peaks,
    save_report,
)

CSV_METRICS = ("accuracy", "precision", "recall", "f1", "auprc")
CROSS_BLOCKS = ("pairwise", "combined", "holdout")


def _num(v):
    return "" if v is None else repr(float(v))


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ------------------------------------------------------------- feature tables

def _extract_job(args):
    record, ann, pipeline = args
    windows = []
    table = extract_record(record, ann, pipeline,
                           peak_sink=lambda rid, start, peaks: windows.append(peaks))
    peaks = np.unique(np.concatenate(windows)) if windows else np.zeros(0, np.int64)
    return table, peaks


def build_table(dataset, cfg: RunConfig, peaks_dir=None) -> FeatureTable:
    """Feature table for one dataset spec (precomputed table or raw records)."""
    if dataset.path is None:
        return load_feature_table(dataset.table, dataset_id=dataset.dataset_id)
    pairs = load_dataset(dataset.path)
    jobs = [(r, a, cfg.pipeline) for r, a in pairs]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_extract_job, jobs))
    else:
        results = [_extract_job(j) for j in jobs]
    if peaks_dir is not None:
        for (record, _), (_, peaks) in zip(pairs, results):
            save_peaks(peaks, Path(peaks_dir) / dataset.dataset_id / f"{record.record_id}.peaks")
    return FeatureTable.concat([t for t, _ in results], dataset_id=dataset.dataset_id)


def build_tables(cfg: RunConfig, datasets=None):
    datasets = cfg.datasets if datasets is None else datasets
    if not datasets:
        raise ConfigError("no [dataset.*] sections configured")
    return {d.dataset_id: build_table(d, cfg) for d in datasets}


def cmd_pipeline(cfg: RunConfig, peaks_dir=None):
    """Extract and persist a feature table per dataset; returns ``(tables, summary)``."""
    if not cfg.datasets:
        raise ConfigError("no [dataset.*] sections configured")
    tables = {}
    for d in cfg.datasets:
        table = build_table(d, cfg, peaks_dir)
        save_feature_table(table, cfg.output_dir / "features" / f"{d.dataset_id}.csv")
        tables[d.dataset_id] = table
    summary = count_summary(tables.values())
    _write_text(cfg.output_dir / "summary.txt", summary)
    return tables, summary


# ------------------------------------------------------------------- within

def within_report(table, cfg: RunConfig, spec):
    rep = cross_validate(table, spec, k=cfg.folds, seed=cfg.seed, pooled=cfg.pooled,
                         group_by_record=cfg.group_by_record)
    rep.meta["window_seconds"] = cfg.pipeline.segmentation.window_seconds
    return rep


def _metric_cells(rep):
    return [_num(v) for v in rep.values()]


def cmd_within(cfg: RunConfig, tables=None):
    """Cross-validated metrics per (dataset, model); returns ``[(dataset, model, report)]``."""
    datasets = cfg.training_datasets() or list(cfg.datasets)
    tables = tables if tables is not None else build_tables(cfg, datasets)
    results = []
    for d in datasets:
        for spec in cfg.models:
            rep = within_report(tables[d.dataset_id], cfg, spec)
            save_report(rep, cfg.output_dir / "reports" / f"within_{d.dataset_id}_{spec.kind}.json")
            results.append((d.dataset_id, spec.kind, rep))
    _write_csv(
        cfg.output_dir / "within.csv",
        ["dataset", "model", *CSV_METRICS, "n_samples"],
        [[ds, kind, *_metric_cells(r), r.n_samples] for ds, kind, r in results],
    )
    _write_text(
        cfg.output_dir / "within.txt",
        format_table([((ds, kind), r) for ds, kind, r in results], ("Dataset", "Model")),
    )
    return results


# -------------------------------------------------------------------- cross

def average_report(reports, meta=None):
    """Arithmetic mean of each metric over ``reports`` (AUPRC over defined values)."""
    reports = list(reports)
    if not reports:
        raise DataError("no reports to average")
    vals = {}
    for name in METRIC_NAMES:
        xs = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        vals[name] = float(np.mean(xs)) if xs else None
    cm = np.sum([np.asarray(r.confusion) for r in reports], axis=0)
    return MetricsReport(
        **vals,
        confusion=cm.tolist(),
        support={k: int(sum(r.support.get(k, 0) for r in reports)) for k in ("clean", "noisy")},
        meta=dict(meta or {}),
    )


def cross_plan(cfg: RunConfig, blocks=CROSS_BLOCKS):
    """``[(block, train_ids, test_id)]`` in a fixed order."""
    train = [d.dataset_id for d in cfg.training_datasets()]
    holdout = [d.dataset_id for d in cfg.holdout_datasets()]
    plan = []
    if "pairwise" in blocks:
        plan += [("pairwise", (a,), b) for a in train for b in train if a != b]
    if "combined" in blocks and len(train) >= 2:
        plan += [("combined", tuple(t for t in train if t != c), c) for c in train]
    if "holdout" in blocks:
        for h in holdout:
            for r in range(1, len(train) + 1):
                plan += [("holdout", combo, h) for combo in itertools.combinations(train, r)]
    return plan


def run_cross_pair(tables, train_ids, test_id, spec, seed):
    if test_id in train_ids:
        raise DataError(f"train/test overlap: dataset {test_id!r}")
    return cross_eval([tables[t] for t in train_ids], tables[test_id], spec, seed)


def cmd_cross(cfg: RunConfig, blocks=CROSS_BLOCKS, tables=None):
    """Pairwise, leave-one-out combined and holdout runs with per-block averages.

    Returns ``[(block, train_label, test_id, report)]`` including the
    ``Average`` rows.
    """
    plan = cross_plan(cfg, blocks)
    if not plan:
        raise ConfigError("cross experiment needs at least two datasets")
    tables = tables if tables is not None else build_tables(cfg)
    spec = cfg.model
    rows = []
    for block in CROSS_BLOCKS:
        runs = [(tr, te) for b, tr, te in plan if b == block]
        if not runs:
            continue
        reps = []
        for train_ids, test_id in runs:
            rep = run_cross_pair(tables, train_ids, test_id, spec, cfg.seed)
            rep.meta["block"] = block
            label = "+".join(train_ids)
            save_report(rep, cfg.output_dir / "reports" / f"{block}_{label}__{test_id}.json")
            rows.append((block, label, test_id, rep))
            reps.append(rep)
        avg = average_report(reps, {"experiment": "cross", "block": block, "average_of": len(reps)})
        save_report(avg, cfg.output_dir / "reports" / f"{block}_average.json")
        rows.append((block, "Average", "", avg))
    _write_csv(
        cfg.output_dir / "cross.csv",
        ["block", "train", "test", *CSV_METRICS, "n_samples"],
        [[b, tr, te, *_metric_cells(r), r.n_samples] for b, tr, te, r in rows],
    )
    _write_text(
        cfg.output_dir / "cross.txt",
        format_table([((b, tr, te), r) for b, tr, te, r in rows], ("Mode", "Train", "Test")),
    )
    return rows


# -------------------------------------------------------------------- sweep

def cmd_sweep_window(cfg: RunConfig, window_list=None):
    """Re-extract features and cross-validate once per window length.

    Returns ``[(window_seconds, report)]``; ``sweep.csv`` marks the row with
    the highest F1 (first on ties).
    """
    windows = list(cfg.windows if window_list is None else window_list)
    if not windows:
        raise ConfigError("empty window list")
    if cfg.sweep_dataset is not None:
        dataset = cfg.dataset(cfg.sweep_dataset)
    elif cfg.training_datasets():
        dataset = cfg.training_datasets()[0]
    else:
        raise ConfigError("no dataset to sweep")
    if dataset.path is None:
        raise ConfigError(f"dataset {dataset.dataset_id!r} needs raw records to sweep windows")
    results = []
    for w in windows:
        wcfg = cfg.with_window(w)
        table = build_table(dataset, wcfg)
        rep = within_report(table, wcfg, cfg.model)
        save_report(rep, cfg.output_dir / "reports" / f"sweep_{dataset.dataset_id}_{float(w):g}s.json")
        results.append((float(w), rep))
    f1 = [r.f1_weighted for _, r in results]
    best = int(np.argmax(f1))
    _write_csv(
        cfg.output_dir / "sweep.csv",
        ["window_s", *CSV_METRICS, "n_samples", "best_f1"],
        [[f"{w:g}", *_metric_cells(r), r.n_samples, int(i == best)]
         for i, (w, r) in enumerate(results)],
    )
    _write_text(
        cfg.output_dir / "sweep.txt",
        format_table([((f"{w:g}", "*" if i == best else ""), r)
                      for i, (w, r) in enumerate(results)], ("Window (s)", "Best")),
    )
    return results
