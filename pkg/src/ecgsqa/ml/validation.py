"""Stratified folds, within-dataset cross-validation and cross-dataset runs."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from ..signal_io import FeatureTable
from .metrics import mean_report, metrics
from .models import ModelSpec, predict, train


def stratified_folds(y, k=5, seed=0):
    """Fold index per row.

    Each class is shuffled and dealt round-robin; dealing continues where the
    previous class stopped so fold sizes stay balanced too.
    """
    y = np.asarray(y, dtype=np.int64)
    if k < 2:
        raise DataError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds = np.full(y.size, -1, dtype=np.int64)
    offset = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < k:
            raise DataError(f"class {cls} has {idx.size} members, fewer than k={k}")
        perm = rng.permutation(idx)
        folds[perm] = (offset + np.arange(perm.size)) % k
        offset = (offset + perm.size) % k
    return folds


def grouped_folds(y, groups, k=5, seed=0):
    """Fold index per row with every group (recording) kept in one fold.

    Groups are shuffled, ordered by descending positive count and assigned
    greedily to the fold currently holding the fewest positives (then fewest
    rows), which keeps class balance roughly stratified.
    """
    y = np.asarray(y, dtype=np.int64)
    groups = np.asarray(groups)
    names = list(dict.fromkeys(groups.tolist()))
    if len(names) < k:
        raise DataError(f"{len(names)} groups, fewer than k={k}")
    rng = np.random.default_rng(seed)
    names = [names[i] for i in rng.permutation(len(names))]
    stats = {g: (int(y[groups == g].sum()), int((groups == g).sum())) for g in names}
    names.sort(key=lambda g: -stats[g][0])
    pos = np.zeros(k, dtype=np.int64)
    rows = np.zeros(k, dtype=np.int64)
    folds = np.full(y.size, -1, dtype=np.int64)
    for g in names:
        f = min(range(k), key=lambda j: (pos[j], rows[j], j))
        folds[groups == g] = f
        pos[f] += stats[g][0]
        rows[f] += stats[g][1]
    return folds


def score_table(model, table: FeatureTable):
    """Labels and scores for every row; undetectable rows are called noisy."""
    labels = np.ones(len(table), dtype=np.int64)
    scores = np.ones(len(table))
    if table.valid.any():
        lv, sv = predict(model, table.features[table.valid])
        labels[table.valid] = lv
        scores[table.valid] = sv
    return labels, scores


def _fit(spec, table, seed):
    rows = table.valid
    if not rows.any():
        raise DataError("no valid training rows")
    return train(spec, table.features[rows], table.labels[rows], seed=seed)


def cross_validate(table: FeatureTable, spec: ModelSpec = ModelSpec(), k=5, seed=0,
                   pooled=False, group_by_record=False):
    """k-fold CV on one table.

    The default report is the mean of the fold metrics (fold reports kept in
    ``folds``); ``pooled`` scores the concatenated out-of-fold predictions.
    """
    if group_by_record:
        folds = grouped_folds(table.labels, table.record_ids, k, seed)
    else:
        folds = stratified_folds(table.labels, k, seed)
    fold_reports = []
    all_labels = np.zeros(len(table), dtype=np.int64)
    all_scores = np.zeros(len(table))
    for f in range(k):
        test = folds == f
        model = _fit(spec, table.subset(~test), seed)
        labels, scores = score_table(model, table.subset(test))
        all_labels[test] = labels
        all_scores[test] = scores
        rep = metrics(table.labels[test], labels, scores)
        rep.meta = {"fold": f, "n_test": int(test.sum())}
        fold_reports.append(rep)
    meta = {
        "experiment": "within",
        "dataset": table.dataset_id,
        "model": spec.kind,
        "k": k,
        "seed": seed,
        "aggregation": "pooled" if pooled else "mean",
        "group_by_record": bool(group_by_record),
    }
    if pooled:
        rep = metrics(table.labels, all_labels, all_scores)
        rep.meta = meta
        rep.folds = fold_reports
        return rep
    return mean_report(fold_reports, meta)


def cross_eval(train_tables, test_table: FeatureTable, spec: ModelSpec = ModelSpec(), seed=0):
    """Train once on the union of ``train_tables`` and score ``test_table``."""
    train_tables = list(train_tables)
    train_ids = [t.dataset_id for t in train_tables]
    if test_table.dataset_id and test_table.dataset_id in train_ids:
        raise DataError(f"train/test overlap: dataset {test_table.dataset_id!r}")
    test_records = set(test_table.record_ids)
    for t in train_tables:
        shared = test_records.intersection(t.record_ids)
        if shared:
            raise DataError(f"train/test overlap: record {sorted(shared)[0]!r}")
    merged = FeatureTable.concat(train_tables)
    model = _fit(spec, merged, seed)
    labels, scores = score_table(model, test_table)
    rep = metrics(test_table.labels, labels, scores)
    rep.meta = {
        "experiment": "cross",
        "train": train_ids,
        "test": test_table.dataset_id,
        "model": spec.kind,
        "seed": seed,
        "n_train": int(merged.valid.sum()),
    }
    return rep
