import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ecgsqa.errors import ConfigError, DataError
from ecgsqa.hrv import FEATURE_NAMES
from ecgsqa.ml import (
    ForestConfig,
    LogRegConfig,
    ModelSpec,
    TreeConfig,
    average_precision,
    cross_eval,
    cross_validate,
    grouped_folds,
    mean_report,
    metrics,
    predict,
    stratified_folds,
    train_dtree,
    train_logreg,
    train_rf,
)
from ecgsqa.ml.tree import best_split, tree_depth
from ecgsqa.signal_io import FeatureTable, ModelArtifact

D = len(FEATURE_NAMES)


def blobs(n=200, margin=5.0, d=2, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d))
    X[:, 0] += margin * y
    return X, y


def feature_table(X, y, dataset_id, records=None, valid=None):
    n = len(y)
    return FeatureTable(
        records or [f"{dataset_id}_{i // 5}" for i in range(n)],
        list(range(n)),
        np.asarray(X, dtype=float),
        list(y),
        np.ones(n, bool) if valid is None else valid,
        dataset_id,
    )


def gini_scan(x, y):
    """Every midpoint between distinct sorted values, scored directly."""
    vals = sorted(set(x))
    best = None
    for a, b in zip(vals, vals[1:]):
        t = (a + b) / 2
        score = 0.0
        for side in ([yy for xx, yy in zip(x, y) if xx <= t], [yy for xx, yy in zip(x, y) if xx > t]):
            p = sum(side) / len(side)
            score += len(side) / len(x) * (1 - p**2 - (1 - p) ** 2)
        if best is None or score < best[0] - 1e-12:
            best = (score, t)
    return best


# ---------------------------------------------------------------- trees

def test_split_example():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([0, 0, 1, 1])
    score, thr = best_split(x, y, np.ones(4))
    assert thr == 1.5 == gini_scan(x.tolist(), y.tolist())[1]
    assert score == pytest.approx(0.0)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 12), st.integers(0, 1)), min_size=2, max_size=30))
def test_split_matches_gini_scan(pairs):
    x = [float(a) for a, _ in pairs]
    y = [b for _, b in pairs]
    got = best_split(np.array(x), np.array(y), np.ones(len(x)))
    want = gini_scan(x, y)
    if want is None:
        assert got is None
    else:
        assert got[1] == want[1]
        assert got[0] == pytest.approx(want[0], abs=1e-12)


def test_pure_node_is_one_leaf():
    X = np.random.default_rng(0).normal(size=(10, 3))
    model = train_dtree(X, np.ones(10, int))
    assert tree_depth(model.parameters["tree"]) == 0
    assert predict(model, X)[1].tolist() == [1.0] * 10


def test_axis_aligned_depth_two():
    X = np.array([[x, z] for x in range(4) for z in range(4)], dtype=float)
    y = ((X[:, 0] >= 2) & (X[:, 1] >= 1)).astype(int)
    model = train_dtree(X, y, TreeConfig(max_depth=2))
    assert (predict(model, X)[0] == y).all()
    assert tree_depth(model.parameters["tree"]) <= 2


def test_forest_deterministic():
    X, y = blobs(margin=1.0)
    a = train_rf(X, y, ForestConfig(n_trees=15, seed=4))
    b = train_rf(X, y, ForestConfig(n_trees=15, seed=4))
    assert a.parameters == b.parameters
    c = train_rf(X, y, ForestConfig(n_trees=15, seed=5))
    assert a.parameters != c.parameters


def test_forest_separable_blobs():
    X, y = blobs(margin=5.0)
    model = train_rf(X, y, ForestConfig(n_trees=25, seed=1))
    assert (predict(model, X)[0] == y).mean() >= 0.99


def test_forest_reduces_to_tree():
    X, y = blobs(margin=0.8, d=4, seed=2)
    rf = train_rf(X, y, ForestConfig(n_trees=1, bootstrap=False, max_features=4))
    dt = train_dtree(X, y)
    Xt = np.random.default_rng(9).normal(size=(100, 4))
    assert np.array_equal(predict(rf, Xt)[1], predict(dt, Xt)[1])


def test_forest_tree_seed_independent_of_count():
    X, y = blobs(margin=1.0)
    small = train_rf(X, y, ForestConfig(n_trees=3, seed=7))
    large = train_rf(X, y, ForestConfig(n_trees=6, seed=7))
    assert small.parameters["trees"] == large.parameters["trees"][:3]


def test_pure_positive_forest_scores_one():
    leaf = {"feature": [-1], "threshold": [0.0], "left": [-1], "right": [-1], "value": [1.0]}
    model = ModelArtifact("rforest", {"trees": [leaf, leaf, leaf]}, [f"x{i}" for i in range(2)])
    assert predict(model, np.zeros((4, 2)))[1].tolist() == [1.0] * 4


def test_single_class_rejected():
    with pytest.raises(DataError, match="single-class"):
        train_rf(np.zeros((5, 2)), np.zeros(5, int))
    with pytest.raises(DataError, match="single-class"):
        train_logreg(np.zeros((5, 2)), np.zeros(5, int))


def test_feature_dimension_checked():
    X, y = blobs()
    model = train_rf(X, y, ForestConfig(n_trees=2))
    with pytest.raises(DataError):
        predict(model, np.zeros((3, 5)))


# ------------------------------------------------------------- logistic

def test_logreg_separable():
    X = np.repeat([[-1.0], [1.0]], 50, axis=0)
    y = np.repeat([0, 1], 50)
    model = train_logreg(X, y)
    assert (predict(model, X)[0] == y).all()


def test_logreg_random_labels_auprc_near_prevalence():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(2000, 5))
    y = rng.permutation(np.repeat([0, 1], 1000))
    model = train_logreg(X, y)
    ap = average_precision(y, predict(model, X)[1])
    assert ap == pytest.approx(0.5, abs=0.1)


def test_logreg_deterministic():
    X, y = blobs(margin=1.0, d=3)
    a = train_logreg(X, y, LogRegConfig(seed=3))
    b = train_logreg(X, y, LogRegConfig(seed=3))
    assert a.parameters == b.parameters


def test_logreg_zero_weights_score_half():
    model = ModelArtifact("logreg", {"coef": [0.0] * D, "intercept": 0.0,
                                     "mean": [0.0] * D, "scale": [1.0] * D})
    labels, scores = predict(model, np.random.default_rng(0).normal(size=(7, D)) * 1e3)
    assert scores.tolist() == [0.5] * 7
    assert labels.tolist() == [0] * 7  # a 0.5 tie maps to clean


def test_logreg_stationary_point():
    X, y = blobs(margin=1.0, d=3, seed=4)
    cfg = LogRegConfig(C=0.5, max_iter=500)
    p = train_logreg(X, y, cfg).parameters
    w, b = np.array(p["coef"]), p["intercept"]
    r = 1 / (1 + np.exp(-(X @ w + b))) - y
    grad = np.append(X.T @ r + w / cfg.C, r.sum())
    assert np.abs(grad).max() <= cfg.tol


def test_logreg_config_validation():
    with pytest.raises(ConfigError):
        LogRegConfig(C=0)
    with pytest.raises(ConfigError):
        ModelSpec("svm")


# ---------------------------------------------------------------- folds

def test_folds_divisible_case():
    y = np.array([1] * 20 + [0] * 80)
    folds = stratified_folds(y, 5, seed=0)
    for f in range(5):
        assert (y[folds == f] == 1).sum() == 4
        assert (y[folds == f] == 0).sum() == 16


def test_folds_remainder_dealing():
    y = np.array([1] * 22 + [0] * 78)
    folds = stratified_folds(y, 5, seed=1)
    assert sorted((y[folds == f] == 1).sum() for f in range(5)) == [4, 4, 4, 5, 5]


def test_folds_deterministic():
    y = np.random.default_rng(0).integers(0, 2, 90)
    assert np.array_equal(stratified_folds(y, 5, 3), stratified_folds(y, 5, 3))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=10, max_size=300), st.integers(2, 6), st.integers(0, 10**6))
def test_folds_proportional(labels, k, seed):
    y = np.array(labels)
    present = [(y == c).sum() for c in (0, 1) if (y == c).any()]
    if min(present) < k:
        with pytest.raises(DataError):
            stratified_folds(y, k, seed)
        return
    folds = stratified_folds(y, k, seed)
    assert folds.min() == 0 and folds.max() == k - 1
    for f in range(k):
        size = (folds == f).sum()
        for c in (0, 1):
            expected = (y == c).sum() / k
            assert abs((y[folds == f] == c).sum() - expected) < 1 + 1e-9
        assert abs(size - y.size / k) < 1 + 1e-9


def test_grouped_folds_keep_records_together():
    rng = np.random.default_rng(0)
    groups = np.repeat([f"r{i}" for i in range(12)], 9)
    y = rng.integers(0, 2, groups.size)
    folds = grouped_folds(y, groups, 5, seed=2)
    for g in np.unique(groups):
        assert np.unique(folds[groups == g]).size == 1
    assert set(folds.tolist()) == set(range(5))


# -------------------------------------------------------------- metrics

def test_perfect_predictions():
    rep = metrics([0, 1, 1, 0], [0, 1, 1, 0], [0.1, 0.9, 0.8, 0.2])
    assert rep.values() == [1.0] * 5


def test_ap_example():
    assert average_precision([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.1]) == pytest.approx(0.5 + 0.5 * 2 / 3)


def test_all_negative_predictions():
    rep = metrics([0, 0, 0, 1], [0, 0, 0, 0], [0.1, 0.2, 0.3, 0.4])
    assert rep.accuracy == 0.75
    # clean precision 3/4 weighted by 3/4; noisy precision counts as 0
    assert rep.precision_weighted == pytest.approx(0.75 * 0.75)
    assert rep.confusion == [[3, 0], [1, 0]]


def test_no_positive_auprc_is_none():
    rep = metrics([0, 0, 0], [0, 1, 0], [0.2, 0.6, 0.1])
    assert rep.auprc is None
    assert rep.accuracy == pytest.approx(2 / 3)


def test_tied_scores_form_one_step():
    # order inside the tie must not matter
    assert average_precision([1, 0], [0.5, 0.5]) == average_precision([0, 1], [0.5, 0.5]) == 0.5


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 20)),
                min_size=1, max_size=60))
def test_metrics_match_brute_force(rows):
    y = [a for a, _, _ in rows]
    lab = [b for _, b, _ in rows]
    sc = [c / 20 for _, _, c in rows]
    rep = metrics(y, lab, sc)
    want = oracles.brute_metrics(y, lab)
    assert rep.accuracy == want["accuracy"]
    assert rep.precision_weighted == pytest.approx(want["precision"], abs=1e-12)
    assert rep.recall_weighted == pytest.approx(want["recall"], abs=1e-12)
    assert rep.f1_weighted == pytest.approx(want["f1"], abs=1e-12)
    ap = oracles.brute_average_precision(y, sc)
    assert (rep.auprc is None) == (ap is None)
    if ap is not None:
        assert abs(rep.auprc - ap) <= 1e-12
    # support-weighted recall is plain accuracy in the binary case
    assert rep.recall_weighted == pytest.approx(rep.accuracy, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.floats(0, 1)), min_size=1, max_size=40))
def test_ap_monotone_under_top_positive(rows):
    y = [a for a, _ in rows]
    s = [b for _, b in rows]
    before = average_precision(y, s)
    after = average_precision(y + [1], s + [2.0])
    assert after >= (before or 0.0) - 1e-12


def test_metrics_length_mismatch():
    with pytest.raises(DataError):
        metrics([0, 1], [0], [0.1, 0.2])


def test_mean_report_sums_confusions():
    a = metrics([0, 1], [0, 1], [0.1, 0.9])
    b = metrics([0, 1, 1], [1, 1, 0], [0.6, 0.7, 0.2])
    m = mean_report([a, b])
    assert m.accuracy == pytest.approx((1 + 1 / 3) / 2)
    assert m.confusion == [[1, 1], [1, 2]]
    assert m.folds == [a, b]


# ----------------------------------------------------------- evaluation

def test_cross_eval_overlap_rejected():
    X, y = blobs(60, d=D)
    t = feature_table(X, y, "A")
    with pytest.raises(DataError, match="train/test overlap"):
        cross_eval([t], t, ModelSpec("dtree"))


def test_cross_eval_all_clean_test_set():
    X, y = blobs(60, d=D, seed=1)
    train = feature_table(X, y, "A")
    Xt, _ = blobs(20, d=D, seed=2)
    test = feature_table(Xt, np.zeros(20, int), "B")
    rep = cross_eval([train], test, ModelSpec("rforest", {"n_trees": 5}))
    assert rep.auprc is None
    assert 0 <= rep.accuracy <= 1


def test_invalid_rows_excluded_from_training_and_called_noisy():
    X, y = blobs(80, d=D, seed=3)
    X = X.copy()
    valid = np.ones(80, bool)
    valid[:10] = False
    X[:10] = np.nan
    train = feature_table(X, y, "A", valid=valid)
    test_valid = np.ones(80, bool)
    test_valid[5] = False
    Xt = X.copy()
    Xt[:10] = 0.0
    Xt[5] = np.nan
    test = feature_table(Xt, y, "B", valid=test_valid)
    rep = cross_eval([train], test, ModelSpec("logreg"))
    assert rep.meta["n_train"] == 70
    assert rep.n_samples == 80


def test_cross_validate_mean_and_pooled():
    X, y = blobs(100, margin=1.0, d=D, seed=6)
    t = feature_table(X, y, "A")
    spec = ModelSpec("dtree", {"max_depth": 2})
    mean = cross_validate(t, spec, k=5, seed=1)
    pooled = cross_validate(t, spec, k=5, seed=1, pooled=True)
    assert len(mean.folds) == len(pooled.folds) == 5
    assert mean.accuracy == pytest.approx(np.mean([f.accuracy for f in mean.folds]))
    assert pooled.n_samples == 100 == mean.n_samples
    # accuracy with equal fold sizes is the same either way
    assert pooled.accuracy == pytest.approx(mean.accuracy)


def test_cross_validate_separable_is_perfect():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, D))
    y = np.arange(200) % 2
    X[y == 1, FEATURE_NAMES.index("RMSSD")] += 10.0
    rep = cross_validate(feature_table(X, y, "A"), ModelSpec("rforest", {"n_trees": 10}), seed=2)
    assert rep.accuracy == 1.0


def test_cross_validate_shuffled_labels():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(400, D))
    y = rng.permutation(np.arange(400) % 2)
    rep = cross_validate(feature_table(X, y, "A"), ModelSpec("rforest", {"n_trees": 20}), seed=2)
    assert rep.auprc == pytest.approx(0.5, abs=0.1)
