"""Tree-builder checks, including the exhaustive best-split oracle the
depth-limited builder must agree with exactly."""

import numpy as np
import pytest

from sast_triage.trees import (
    best_gini_split,
    grow_classification_tree,
    grow_regression_tree,
    regression_value,
    tree_from_dict,
    tree_to_dict,
)


def oracle_best_split(X, y):
    """Brute force over every (feature, midpoint) candidate; same score
    formula and tie-breaking as the builder, computed independently."""
    n = len(y)
    best = None
    for f in range(X.shape[1]):
        values = sorted(set(float(v) for v in X[:, f]))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2.0
            if not thr < hi:
                continue
            left = X[:, f] <= thr
            l1 = int(y[left].sum())
            l0 = int(left.sum()) - l1
            r1 = int(y.sum()) - l1
            r0 = (n - int(left.sum())) - r1
            score = (l0 * l0 + l1 * l1) / (l0 + l1) + (r0 * r0 + r1 * r1) / (r0 + r1)
            if best is None or score > best[0]:
                best = (score, f, thr)
    return best


def oracle_tree(X, y, max_depth, depth=0):
    n1 = int(y.sum())
    n0 = len(y) - n1
    if depth >= max_depth or n0 == 0 or n1 == 0:
        return {"counts": [n0, n1]}
    best = oracle_best_split(X, y)
    parent = (n0 * n0 + n1 * n1) / len(y)
    if best is None or best[0] <= parent:
        return {"counts": [n0, n1]}
    _, feature, threshold = best
    mask = X[:, feature] <= threshold
    return {
        "feature": feature,
        "threshold": threshold,
        "left": oracle_tree(X[mask], y[mask], max_depth, depth + 1),
        "right": oracle_tree(X[~mask], y[~mask], max_depth, depth + 1),
    }


def test_best_split_matches_oracle_on_random_instances():
    rng = np.random.default_rng(1234)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        X = rng.random((n, 2))
        y = rng.integers(0, 2, size=n)
        assert best_gini_split(X, y, [0, 1]) == oracle_best_split(X, y)


def test_depth_two_tree_matches_exhaustive_oracle():
    rng = np.random.default_rng(99)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        X = rng.random((n, 2))
        y = rng.integers(0, 2, size=n)
        tree = grow_classification_tree(
            X, y, max_depth=2, features_per_split=2, rng=np.random.default_rng(0)
        )
        assert tree_to_dict(tree) == oracle_tree(X, y, 2)


def test_perfectly_separable_single_split():
    X = np.array([[0.1], [0.2], [0.3], [0.4], [0.6], [0.7], [0.8], [0.9]])
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    tree = grow_classification_tree(X, y, 1, 1, np.random.default_rng(0))
    assert not tree.is_leaf()
    assert tree.left.counts == (4, 0)
    assert tree.right.counts == (0, 4)


def test_pure_node_stays_leaf():
    X = np.random.default_rng(0).random((5, 2))
    y = np.zeros(5, dtype=int)
    tree = grow_classification_tree(X, y, 5, 2, np.random.default_rng(0))
    assert tree.is_leaf()
    assert tree.counts == (5, 0)


def test_no_improving_split_makes_leaf():
    # identical feature rows cannot be split at all
    X = np.ones((4, 2))
    y = np.array([0, 1, 0, 1])
    tree = grow_classification_tree(X, y, 3, 2, np.random.default_rng(0))
    assert tree.is_leaf()
    assert tree.counts == (2, 2)


def test_leaves_hold_nonzero_sample_counts():
    rng = np.random.default_rng(5)
    X = rng.random((30, 3))
    y = rng.integers(0, 2, size=30)
    tree = grow_classification_tree(X, y, 6, 2, np.random.default_rng(1))

    def walk(node):
        if node.is_leaf():
            assert sum(node.counts) > 0
        else:
            walk(node.left)
            walk(node.right)

    walk(tree)


class TestRegressionTree:
    def test_depth_zero_leaf_is_newton_step(self):
        rng = np.random.default_rng(3)
        X = rng.random((12, 2))
        grad = rng.normal(size=12)
        hess = rng.random(12) + 0.1
        tree = grow_regression_tree(X, grad, hess, max_depth=0, leaf_penalty=1.0)
        assert tree.is_leaf()
        assert tree.value == pytest.approx(grad.sum() / (hess.sum() + 1.0), rel=1e-12)

    def test_split_reduces_residual_structure(self):
        X = np.array([[0.0], [0.1], [0.9], [1.0]])
        grad = np.array([-1.0, -1.0, 1.0, 1.0])
        hess = np.full(4, 0.25)
        tree = grow_regression_tree(X, grad, hess, max_depth=2, leaf_penalty=0.0)
        assert not tree.is_leaf()
        assert regression_value(tree, np.array([0.05])) == pytest.approx(-2.0 / 0.5)
        assert regression_value(tree, np.array([0.95])) == pytest.approx(2.0 / 0.5)

    def test_constant_targets_make_leaf(self):
        X = np.random.default_rng(0).random((6, 2))
        grad = np.full(6, 0.5)
        hess = np.full(6, 0.25)
        tree = grow_regression_tree(X, grad, hess, max_depth=3, leaf_penalty=1.0)
        assert tree.is_leaf()


def test_tree_dict_round_trip():
    rng = np.random.default_rng(8)
    X = rng.random((20, 2))
    y = rng.integers(0, 2, size=20)
    tree = grow_classification_tree(X, y, 4, 2, np.random.default_rng(2))
    payload = tree_to_dict(tree)
    assert tree_to_dict(tree_from_dict(payload)) == payload
