"""CART classification trees (Gini) stored as flat arrays."""

from __future__ import annotations

import numpy as np

LEAF = -1


def best_split(x, y, w):
    """Best Gini split of one feature.

    Returns ``(score, threshold)`` where ``score`` is the weighted child
    impurity (lower is better), or ``None`` when the feature is constant.
    Thresholds are midpoints between consecutive distinct values; ties in
    score go to the lowest threshold.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    distinct = xs[1:] > xs[:-1]
    if not distinct.any():
        return None
    ws = w[order]
    pos = np.cumsum(ws * y[order])[:-1]
    tot = np.cumsum(ws)[:-1]
    total_w = tot[-1] + ws[-1]
    total_pos = pos[-1] + ws[-1] * y[order][-1]
    neg = tot - pos
    rtot = total_w - tot
    rpos = total_pos - pos
    rneg = rtot - rpos
    # weighted gini = 1 - (sum_child (pos^2 + neg^2) / w_child) / W
    gain = (pos**2 + neg**2) / tot + (rpos**2 + rneg**2) / rtot
    gain = np.where(distinct, gain, -np.inf)
    i = int(np.argmax(gain))
    score = 1.0 - gain[i] / total_w
    lo, hi = xs[i], xs[i + 1]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return score, float(thr)


def grow_tree(X, y, weights=None, max_features=None, max_depth=None,
              min_samples_split=2, rng=None):
    """Grow one tree depth-first; returns a dict of parallel node arrays.

    ``weights`` are per-row sample counts (bootstrap multiplicities). With
    ``max_features`` set, each split draws features uniformly without
    replacement and keeps drawing past constant ones until ``max_features``
    informative features were examined.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    keep = w > 0
    X, y, w = X[keep], y[keep], w[keep]
    k = d if max_features is None else max(1, min(int(max_features), d))

    feature, threshold, left, right, value, n_node = [], [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        ww = w[idx]
        value.append(float(np.dot(ww, y[idx]) / ww.sum()))
        n_node.append(float(ww.sum()))
        return len(feature) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        p = value[node]
        if p in (0.0, 1.0) or n_node[node] < min_samples_split:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        feats = rng.permutation(d) if (k < d and rng is not None) else np.arange(d)
        best = None
        examined = 0
        for f in feats:
            res = best_split(X[idx, f], y[idx], w[idx])
            if res is None:
                continue
            examined += 1
            if best is None or res[0] < best[0]:
                best = (res[0], int(f), res[1])
            if examined >= k:
                break
        if best is None:
            continue
        _, f, thr = best
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        lnode = new_node(li)
        rnode = new_node(ri)
        left[node], right[node] = lnode, rnode
        # right pushed first so the left subtree is grown first
        stack.append((rnode, ri, depth + 1))
        stack.append((lnode, li, depth + 1))

    return {
        "feature": feature,
        "threshold": threshold,
        "left": left,
        "right": right,
        "value": value,
    }


def tree_proba(tree, X):
    """Positive-class probability of each row of ``X``."""
    X = np.asarray(X, dtype=float)
    feature = np.asarray(tree["feature"], dtype=np.int64)
    threshold = np.asarray(tree["threshold"], dtype=float)
    left = np.asarray(tree["left"], dtype=np.int64)
    right = np.asarray(tree["right"], dtype=np.int64)
    value = np.asarray(tree["value"], dtype=float)
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] != LEAF
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] != LEAF
    return value[node]


def tree_depth(tree):
    left, right = tree["left"], tree["right"]
    depth, stack = 0, [(0, 0)]
    while stack:
        nd, dp = stack.pop()
        depth = max(depth, dp)
        if left[nd] != LEAF:
            stack.append((left[nd], dp + 1))
            stack.append((right[nd], dp + 1))
    return depth
