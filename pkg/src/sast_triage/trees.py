"""Decision-tree builders shared by the forest and boosting trainers.

Splits are axis-aligned thresholds taken at midpoints of consecutive
distinct sorted feature values; samples with ``x <= threshold`` go left.
Classification trees maximize the Gini-equivalent score
``sum_child (c0^2 + c1^2) / n_child`` and regression trees the squared-sum
score ``sum_child (sum t)^2 / n_child``; both keep a split only when it
strictly beats the parent's own score, i.e. impurity strictly decreases.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: tuple[int, int] | None = None  # classification leaf: (n_class0, n_class1)
    value: float | None = None  # regression leaf

    def is_leaf(self) -> bool:
        return self.left is None


def gini_partition_score(y_left: np.ndarray, y_right: np.ndarray) -> float:
    """Score of a candidate partition; larger is purer. Equals
    ``sum_child (c0^2 + c1^2)/n_child`` — maximizing it minimizes the
    weighted Gini impurity of the children."""
    l1 = int(y_left.sum())
    l0 = len(y_left) - l1
    r1 = int(y_right.sum())
    r0 = len(y_right) - r1
    return (l0 * l0 + l1 * l1) / len(y_left) + (r0 * r0 + r1 * r1) / len(y_right)


def best_gini_split(
    X: np.ndarray, y: np.ndarray, feature_indices
) -> tuple[float, int, float] | None:
    """Best (score, feature, threshold) over the candidate features.

    Ties break toward the lowest feature index, then the lowest threshold.
    Candidates whose float midpoint fails to separate the sorted values
    (possible for adjacent representables) are discarded. Returns None when
    no feature admits a split.
    """
    n = len(y)
    total1 = int(y.sum())
    best: tuple[float, int, float] | None = None
    for f in feature_indices:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        prefix1 = np.cumsum(y[order])
        cut = np.nonzero(xs[:-1] != xs[1:])[0]
        if len(cut) == 0:
            continue
        thresholds = (xs[cut] + xs[cut + 1]) / 2.0
        valid = thresholds < xs[cut + 1]
        cut, thresholds = cut[valid], thresholds[valid]
        if len(cut) == 0:
            continue
        n_left = cut + 1
        l1 = prefix1[cut]
        l0 = n_left - l1
        n_right = n - n_left
        r1 = total1 - l1
        r0 = n_right - r1
        scores = (l0 * l0 + l1 * l1) / n_left + (r0 * r0 + r1 * r1) / n_right
        i = int(np.argmax(scores))  # first max: lowest threshold on ties
        if best is None or scores[i] > best[0]:
            best = (float(scores[i]), int(f), float(thresholds[i]))
    return best


def grow_classification_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    features_per_split: int,
    rng: np.random.Generator,
    depth: int = 0,
) -> TreeNode:
    """Grow a binary Gini tree; y holds 0/1 labels. At every node
    ``features_per_split`` distinct features are sampled from ``rng`` and
    only those are searched."""
    n = len(y)
    n1 = int(y.sum())
    n0 = n - n1
    if depth >= max_depth or n0 == 0 or n1 == 0:
        return TreeNode(counts=(n0, n1))
    d = X.shape[1]
    feats = np.sort(rng.choice(d, size=min(features_per_split, d), replace=False))
    best = best_gini_split(X, y, feats)
    parent_score = (n0 * n0 + n1 * n1) / n
    if best is None or best[0] <= parent_score:
        return TreeNode(counts=(n0, n1))
    _, feature, threshold = best
    mask = X[:, feature] <= threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=grow_classification_tree(
            X[mask], y[mask], max_depth, features_per_split, rng, depth + 1
        ),
        right=grow_classification_tree(
            X[~mask], y[~mask], max_depth, features_per_split, rng, depth + 1
        ),
    )


def best_sse_split(
    X: np.ndarray, targets: np.ndarray, feature_indices
) -> tuple[float, int, float] | None:
    """Best squared-error split for a regression tree fit to ``targets``.
    Same candidate rule and tie-breaking as ``best_gini_split``."""
    n = len(targets)
    total = float(targets.sum())
    best: tuple[float, int, float] | None = None
    for f in feature_indices:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        prefix = np.cumsum(targets[order])
        cut = np.nonzero(xs[:-1] != xs[1:])[0]
        if len(cut) == 0:
            continue
        thresholds = (xs[cut] + xs[cut + 1]) / 2.0
        valid = thresholds < xs[cut + 1]
        cut, thresholds = cut[valid], thresholds[valid]
        if len(cut) == 0:
            continue
        n_left = cut + 1
        sum_left = prefix[cut]
        sum_right = total - sum_left
        scores = sum_left * sum_left / n_left + sum_right * sum_right / (n - n_left)
        i = int(np.argmax(scores))
        if best is None or scores[i] > best[0]:
            best = (float(scores[i]), int(f), float(thresholds[i]))
    return best


def grow_regression_tree(
    X: np.ndarray,
    gradients: np.ndarray,
    hessians: np.ndarray,
    max_depth: int,
    leaf_penalty: float,
    depth: int = 0,
) -> TreeNode:
    """Grow a regression tree on the gradient targets. Leaves take the
    one-step Newton value ``sum(gradients) / (sum(hessians) + leaf_penalty)``.
    All features are searched (no subsampling)."""

    def leaf() -> TreeNode:
        return TreeNode(
            value=float(gradients.sum()) / (float(hessians.sum()) + leaf_penalty)
        )

    n = len(gradients)
    if depth >= max_depth or n < 2:
        return leaf()
    best = best_sse_split(X, gradients, range(X.shape[1]))
    total = float(gradients.sum())
    if best is None or best[0] <= total * total / n:
        return leaf()
    _, feature, threshold = best
    mask = X[:, feature] <= threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=grow_regression_tree(
            X[mask], gradients[mask], hessians[mask], max_depth, leaf_penalty, depth + 1
        ),
        right=grow_regression_tree(
            X[~mask], gradients[~mask], hessians[~mask], max_depth, leaf_penalty, depth + 1
        ),
    )


def apply_tree(node: TreeNode, x: np.ndarray) -> TreeNode:
    while not node.is_leaf():
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def classification_vote(node: TreeNode, x: np.ndarray) -> int:
    counts = apply_tree(node, x).counts
    return 1 if counts[1] > counts[0] else 0


def regression_value(node: TreeNode, x: np.ndarray) -> float:
    return apply_tree(node, x).value


def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf():
        if node.counts is not None:
            return {"counts": [node.counts[0], node.counts[1]]}
        return {"value": node.value}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": tree_to_dict(node.left),
        "right": tree_to_dict(node.right),
    }


def tree_from_dict(payload: dict) -> TreeNode:
    if "counts" in payload:
        c0, c1 = payload["counts"]
        return TreeNode(counts=(int(c0), int(c1)))
    if "value" in payload:
        return TreeNode(value=float(payload["value"]))
    return TreeNode(
        feature=int(payload["feature"]),
        threshold=float(payload["threshold"]),
        left=tree_from_dict(payload["left"]),
        right=tree_from_dict(payload["right"]),
    )
