"""The four warning classifiers: random forest, linear SVM trained with
Pegasos-style subgradient steps, gradient-boosted trees with logistic loss
and Newton leaf values, and their majority-vote ensemble.

All trainers are deterministic functions of (dataset, params, seed). Models
serialize to a tagged, versioned container (``sast-triage-model v1``) with
exact float round-tripping.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import FeatureVector
from .ingest import LABEL_REAL, LABEL_SPURIOUS
from .trees import (
    TreeNode,
    classification_vote,
    grow_classification_tree,
    grow_regression_tree,
    regression_value,
    tree_from_dict,
    tree_to_dict,
)

CONTAINER_HEADER = "sast-triage-model v1"


class ClassifierError(Exception):
    pass


def label_to_int(label: str) -> int:
    if label == LABEL_REAL:
        return 1
    if label == LABEL_SPURIOUS:
        return 0
    raise ClassifierError(f"unknown label {label!r}")


def int_to_label(value: int) -> str:
    return LABEL_REAL if value == 1 else LABEL_SPURIOUS


@dataclass
class Dataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) 1 = REAL, 0 = SPURIOUS
    row_ids: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ClassifierError("features must be a 2-D matrix")
        if len(self.features) != len(self.labels) or len(self.labels) != len(self.row_ids):
            raise ClassifierError("features, labels and row_ids must align")
        if len(self.labels) < 1:
            raise ClassifierError("dataset must contain at least one sample")
        if not np.isfinite(self.features).all():
            raise ClassifierError("features contain non-finite values")

    @classmethod
    def from_samples(cls, samples) -> "Dataset":
        features = np.stack([s.features.values for s in samples])
        labels = np.array([label_to_int(s.label) for s in samples])
        row_ids = [f"{s.warning.source_file}:{s.warning.category_code}:{i}"
                   for i, s in enumerate(samples)]
        return cls(features, labels, row_ids)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        return Dataset(
            self.features[indices],
            self.labels[indices],
            [self.row_ids[i] for i in indices],
        )


# --- random forest ----------------------------------------------------------


@dataclass
class RandomForestParams:
    seed: int
    n_trees: int = 100
    max_depth: int = 12
    features_per_split: int | None = None  # default: ceil(sqrt(d))


@dataclass
class RandomForestModel:
    trees: list[TreeNode]
    n_trees: int
    max_depth: int
    features_per_split: int
    seed: int
    n_features: int
    constant: bool = False  # training data had a single class (or one row)


def train_random_forest(data: Dataset, params: RandomForestParams) -> RandomForestModel:
    """Bag of Gini trees: each tree sees a seeded bootstrap of the rows and
    samples ``features_per_split`` features at every node. Degenerate input
    (one row or one class) still trains but is flagged ``constant``."""
    if data.dim == 0:
        raise ClassifierError("cannot train on zero features")
    if params.n_trees < 1 or params.max_depth < 1:
        raise ClassifierError("n_trees and max_depth must be positive")
    fps = params.features_per_split or math.isqrt(data.dim - 1) + 1
    fps = min(fps, data.dim)
    constant = data.n < 2 or len(np.unique(data.labels)) < 2
    # per-tree generators derived from the master seed keep the forest
    # reproducible even if trees are grown out of order
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for tree_seed in seeds:
        rng = np.random.default_rng(tree_seed)
        rows = rng.integers(0, data.n, size=data.n)
        trees.append(
            grow_classification_tree(
                data.features[rows], data.labels[rows], params.max_depth, fps, rng
            )
        )
    return RandomForestModel(
        trees=trees,
        n_trees=params.n_trees,
        max_depth=params.max_depth,
        features_per_split=fps,
        seed=params.seed,
        n_features=data.dim,
        constant=constant,
    )


def forest_votes(model: RandomForestModel, x: np.ndarray) -> tuple[int, int]:
    """(votes for REAL, votes for SPURIOUS); always sums to n_trees."""
    real = sum(classification_vote(tree, x) for tree in model.trees)
    return real, len(model.trees) - real


# --- linear SVM ---------------------------------------------------------------


@dataclass
class SvmParams:
    seed: int
    lam: float = 1e-4
    epochs: int = 50


@dataclass
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    lam: float
    epochs: int
    seed: int

    @property
    def n_features(self) -> int:
        return len(self.weights)


def train_svm(data: Dataset, params: SvmParams) -> LinearSvmModel:
    """Pegasos-style SGD on the L2-regularized hinge loss, step size
    1/(lam*t). The bias rides along as a constant feature inside the
    regularized weight vector, which keeps the last iterate the running
    average Pegasos converges through (an unregularized bias with these step
    sizes diverges)."""
    if params.lam <= 0:
        raise ClassifierError("regularization lambda must be positive")
    if len(np.unique(data.labels)) < 2:
        raise ClassifierError("SVM training needs both labels present")
    y = np.where(data.labels == 1, 1.0, -1.0)
    augmented = np.hstack([data.features, np.ones((data.n, 1))])
    w = np.zeros(data.dim + 1)
    rng = np.random.default_rng(params.seed)
    t = 0
    for _ in range(params.epochs):
        for i in rng.permutation(data.n):
            t += 1
            eta = 1.0 / (params.lam * t)
            margin = y[i] * float(np.dot(w, augmented[i]))
            w *= 1.0 - eta * params.lam
            if margin < 1.0:
                w += eta * y[i] * augmented[i]
    return LinearSvmModel(
        weights=w[:-1], bias=float(w[-1]), lam=params.lam,
        epochs=params.epochs, seed=params.seed,
    )


def svm_objective(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float
) -> float:
    """Full objective: lam/2 (||w||^2 + b^2) + mean hinge; y in {-1, +1}.
    The bias is regularized because training treats it as a weight."""
    margins = y * (X @ w + b)
    regularizer = 0.5 * lam * (float(np.dot(w, w)) + b * b)
    return regularizer + float(np.maximum(0.0, 1.0 - margins).mean())


def svm_subgradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Subgradient of ``svm_objective`` (the hinge-active branch everywhere
    the margin is not exactly 1)."""
    margins = y * (X @ w + b)
    active = margins < 1.0
    n = len(y)
    grad_w = lam * w - (X[active] * y[active, None]).sum(axis=0) / n
    grad_b = lam * b - float(y[active].sum()) / n
    return grad_w, grad_b


# --- gradient-boosted trees ---------------------------------------------------


@dataclass
class GbtParams:
    shrinkage: float = 0.1
    n_rounds: int = 100
    max_depth: int = 3
    leaf_penalty: float = 1.0


@dataclass
class GbtModel:
    trees: list[TreeNode]
    shrinkage: float
    n_rounds: int  # requested; len(trees) may be smaller when early-stopped
    max_depth: int
    base_score: float  # prior log-odds of REAL
    leaf_penalty: float
    early_stopped: bool = False
    train_losses: list[float] = field(default_factory=list)
    n_features: int = 0


def _log_loss(y: np.ndarray, raw: np.ndarray) -> float:
    # mean of log(1 + exp(-raw)) for y=1 and log(1 + exp(raw)) for y=0
    return float(np.logaddexp(0.0, np.where(y == 1, -raw, raw)).mean())


def train_gbt(data: Dataset, params: GbtParams) -> GbtModel:
    """Stagewise logistic boosting. Each round fits a regression tree to the
    negative gradients (y - p) with Newton leaves, contributing
    ``shrinkage * tree(x)`` to the raw score. A round that increases the
    full-training-set log-loss is discarded and training stops early."""
    if not 0.0 < params.shrinkage <= 1.0:
        raise ClassifierError("shrinkage must be in (0, 1]")
    if len(np.unique(data.labels)) < 2:
        raise ClassifierError("boosting needs both labels present")
    y = data.labels.astype(np.float64)
    p_real = float(y.mean())
    base_score = math.log(p_real / (1.0 - p_real))
    raw = np.full(data.n, base_score)
    losses = [_log_loss(data.labels, raw)]
    trees: list[TreeNode] = []
    early_stopped = False
    for _ in range(params.n_rounds):
        prob = 1.0 / (1.0 + np.exp(-np.clip(raw, -500.0, 500.0)))
        gradients = y - prob
        hessians = prob * (1.0 - prob)
        tree = grow_regression_tree(
            data.features, gradients, hessians, params.max_depth, params.leaf_penalty
        )
        delta = np.array([regression_value(tree, x) for x in data.features])
        if not np.isfinite(delta).all():
            raise ClassifierError("boosting produced non-finite leaf values")
        candidate = raw + params.shrinkage * delta
        loss = _log_loss(data.labels, candidate)
        if loss > losses[-1]:
            early_stopped = True
            break
        trees.append(tree)
        raw = candidate
        losses.append(loss)
    return GbtModel(
        trees=trees,
        shrinkage=params.shrinkage,
        n_rounds=params.n_rounds,
        max_depth=params.max_depth,
        base_score=base_score,
        leaf_penalty=params.leaf_penalty,
        early_stopped=early_stopped,
        train_losses=losses,
        n_features=data.dim,
    )


def gbt_raw_score(model: GbtModel, x: np.ndarray) -> float:
    return model.base_score + model.shrinkage * sum(
        regression_value(tree, x) for tree in model.trees
    )


# --- ensemble -----------------------------------------------------------------


@dataclass
class EnsembleModel:
    rf: RandomForestModel
    svm: LinearSvmModel
    gbt: GbtModel

    @property
    def n_features(self) -> int:
        return self.rf.n_features


@dataclass
class EnsembleParams:
    rf: RandomForestParams
    svm: SvmParams
    gbt: GbtParams


def train_ensemble(data: Dataset, params: EnsembleParams) -> EnsembleModel:
    return EnsembleModel(
        rf=train_random_forest(data, params.rf),
        svm=train_svm(data, params.svm),
        gbt=train_gbt(data, params.gbt),
    )


# --- prediction -----------------------------------------------------------------


def _as_values(features) -> np.ndarray:
    if isinstance(features, FeatureVector):
        return features.values
    return np.asarray(features, dtype=np.float64)


def _check_dim(model, x: np.ndarray) -> None:
    if len(x) != model.n_features:
        raise ClassifierError(
            f"feature dimension {len(x)} does not match model dimension {model.n_features}"
        )


def predict(model, features) -> tuple[str, float]:
    """Uniform prediction contract. Scores: forest vote fraction for REAL,
    raw SVM margin, logistic probability for boosting, member-vote fraction
    for the ensemble. Exact ties go to SPURIOUS."""
    x = _as_values(features)
    if isinstance(model, EnsembleModel):
        return ensemble_predict(model, x)
    _check_dim(model, x)
    if isinstance(model, RandomForestModel):
        real, _ = forest_votes(model, x)
        score = real / model.n_trees
        return int_to_label(1 if score > 0.5 else 0), score
    if isinstance(model, LinearSvmModel):
        margin = float(np.dot(model.weights, x)) + model.bias
        return int_to_label(1 if margin > 0.0 else 0), margin
    if isinstance(model, GbtModel):
        raw = gbt_raw_score(model, x)
        return int_to_label(1 if raw > 0.0 else 0), 1.0 / (1.0 + math.exp(-raw))
    raise ClassifierError(f"unknown model type {type(model).__name__}")


def ensemble_predict(model: EnsembleModel, features) -> tuple[str, float]:
    """Majority vote over the three members; three voters means no ties."""
    x = _as_values(features)
    _check_dim(model, x)
    votes = [
        label_to_int(predict(member, x)[0])
        for member in (model.rf, model.svm, model.gbt)
    ]
    real = sum(votes)
    return int_to_label(1 if real >= 2 else 0), real / 3.0


def prob_real(model, features) -> float:
    """Probability-like keep score in [0, 1], used by report filtering so one
    threshold scale fits every model kind (the raw SVM margin is squashed
    through a sigmoid)."""
    x = _as_values(features)
    if isinstance(model, LinearSvmModel):
        _check_dim(model, x)
        margin = float(np.dot(model.weights, x)) + model.bias
        return 1.0 / (1.0 + math.exp(-max(-500.0, min(500.0, margin))))
    label_score = predict(model, x)
    if isinstance(model, (RandomForestModel, GbtModel, EnsembleModel)):
        return label_score[1]
    raise ClassifierError(f"unknown model type {type(model).__name__}")


def predict_labels(model, X: np.ndarray) -> np.ndarray:
    return np.array([label_to_int(predict(model, x)[0]) for x in X])


# --- serialization --------------------------------------------------------------

_KIND_BY_TYPE = {
    RandomForestModel: "rf",
    LinearSvmModel: "svm",
    GbtModel: "gbt",
    EnsembleModel: "ensemble",
}


def model_kind(model) -> str:
    return _KIND_BY_TYPE[type(model)]


def _payload(model) -> dict:
    if isinstance(model, RandomForestModel):
        return {
            "constant": model.constant,
            "features_per_split": model.features_per_split,
            "max_depth": model.max_depth,
            "n_features": model.n_features,
            "n_trees": model.n_trees,
            "seed": model.seed,
            "trees": [tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, LinearSvmModel):
        return {
            "bias": model.bias,
            "epochs": model.epochs,
            "lam": model.lam,
            "seed": model.seed,
            "weights": model.weights.tolist(),
        }
    if isinstance(model, GbtModel):
        return {
            "base_score": model.base_score,
            "early_stopped": model.early_stopped,
            "leaf_penalty": model.leaf_penalty,
            "max_depth": model.max_depth,
            "n_features": model.n_features,
            "n_rounds": model.n_rounds,
            "shrinkage": model.shrinkage,
            "train_losses": model.train_losses,
            "trees": [tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, EnsembleModel):
        return {
            "gbt": _payload(model.gbt),
            "rf": _payload(model.rf),
            "svm": _payload(model.svm),
        }
    raise ClassifierError(f"cannot serialize {type(model).__name__}")


def _from_payload(kind: str, payload: dict):
    if kind == "rf":
        return RandomForestModel(
            trees=[tree_from_dict(t) for t in payload["trees"]],
            n_trees=payload["n_trees"],
            max_depth=payload["max_depth"],
            features_per_split=payload["features_per_split"],
            seed=payload["seed"],
            n_features=payload["n_features"],
            constant=payload["constant"],
        )
    if kind == "svm":
        return LinearSvmModel(
            weights=np.array(payload["weights"], dtype=np.float64),
            bias=payload["bias"],
            lam=payload["lam"],
            epochs=payload["epochs"],
            seed=payload["seed"],
        )
    if kind == "gbt":
        return GbtModel(
            trees=[tree_from_dict(t) for t in payload["trees"]],
            shrinkage=payload["shrinkage"],
            n_rounds=payload["n_rounds"],
            max_depth=payload["max_depth"],
            base_score=payload["base_score"],
            leaf_penalty=payload["leaf_penalty"],
            early_stopped=payload["early_stopped"],
            train_losses=payload["train_losses"],
            n_features=payload["n_features"],
        )
    if kind == "ensemble":
        return EnsembleModel(
            rf=_from_payload("rf", payload["rf"]),
            svm=_from_payload("svm", payload["svm"]),
            gbt=_from_payload("gbt", payload["gbt"]),
        )
    raise ClassifierError(f"unknown model kind {kind!r}")


def save_classifier(model, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CONTAINER_HEADER + "\n")
        fh.write(model_kind(model) + "\n")
        fh.write(json.dumps(_payload(model), sort_keys=True) + "\n")


def load_classifier(path: str | Path, expect_kind: str | None = None):
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n", 2)
    if len(lines) < 3 or lines[0] != CONTAINER_HEADER:
        found = lines[0] if lines else "<empty>"
        raise ClassifierError(
            f"expected container header {CONTAINER_HEADER!r}, found {found!r}"
        )
    kind = lines[1]
    if expect_kind is not None and kind != expect_kind:
        raise ClassifierError(
            f"model kind mismatch: file holds {kind!r}, expected {expect_kind!r}"
        )
    try:
        payload = json.loads(lines[2])
    except json.JSONDecodeError as exc:
        raise ClassifierError(f"unreadable model payload: {exc}") from exc
    return _from_payload(kind, payload)
