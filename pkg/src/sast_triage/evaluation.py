"""Scoring and filtering: stratified cross-validation, holdout scoring,
confusion-matrix metrics with the false-positive reduction numbers, and the
fail-open report filter.

Cross-validation retrains the requested classifier per fold; the embedding
is expected to be trained once on the full (unlabeled) token corpus by the
caller and shared across folds, since token statistics carry no labels.
"""

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ingest
from .classifiers import (
    ClassifierError,
    Dataset,
    EnsembleParams,
    GbtParams,
    RandomForestParams,
    SvmParams,
    predict,
    predict_labels,
    prob_real,
    train_ensemble,
    train_gbt,
    train_random_forest,
    train_svm,
)
from .embedding import EmbeddingModel, embed_average
from .lexer import tokenize

MODEL_KINDS = ("rf", "svm", "gbt", "ensemble")


class EvaluationError(Exception):
    pass


@dataclass
class EvaluationReport:
    tp: int  # predicted REAL, actually REAL
    fp: int  # predicted REAL, actually SPURIOUS
    tn: int  # predicted SPURIOUS, actually SPURIOUS
    fn: int  # predicted SPURIOUS, actually REAL
    accuracy: float
    precision_real: float | None
    recall_real: float | None
    precision_spurious: float | None
    recall_spurious: float | None
    fp_before: int
    fp_after: int
    fp_rate_before: float
    fp_rate_after: float
    fold_accuracies: list[float] | None = None

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def build_report(
    y_true: np.ndarray, y_pred: np.ndarray, fold_accuracies: list[float] | None = None
) -> EvaluationReport:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    total = tp + fp + tn + fn
    if total == 0:
        raise EvaluationError("cannot score an empty sample set")

    def ratio(num: int, den: int) -> float | None:
        return num / den if den > 0 else None

    fp_before = tn + fp  # SPURIOUS warnings entering the evaluation
    return EvaluationReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=(tp + tn) / total,
        precision_real=ratio(tp, tp + fp),
        recall_real=ratio(tp, tp + fn),
        precision_spurious=ratio(tn, tn + fn),
        recall_spurious=ratio(tn, tn + fp),
        fp_before=fp_before,
        fp_after=fp,  # SPURIOUS the classifier failed to suppress
        fp_rate_before=fp_before / total,
        fp_rate_after=fp / total,
        fold_accuracies=fold_accuracies,
    )


def constant_report(labels: np.ndarray, predicted: int) -> EvaluationReport:
    """Report for the constant baseline predictor."""
    return build_report(labels, np.full(len(labels), predicted))


def train_classifier(kind: str, data: Dataset, params):
    if kind == "rf":
        return train_random_forest(data, params)
    if kind == "svm":
        return train_svm(data, params)
    if kind == "gbt":
        return train_gbt(data, params)
    if kind == "ensemble":
        return train_ensemble(data, params)
    raise EvaluationError(f"unknown model kind {kind!r}")


def default_params(kind: str, seed: int):
    if kind == "rf":
        return RandomForestParams(seed=seed)
    if kind == "svm":
        return SvmParams(seed=seed)
    if kind == "gbt":
        return GbtParams()
    if kind == "ensemble":
        return EnsembleParams(
            rf=RandomForestParams(seed=seed), svm=SvmParams(seed=seed), gbt=GbtParams()
        )
    raise EvaluationError(f"unknown model kind {kind!r}")


def stratified_fold_assignments(labels: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Seeded stratified fold ids (0..k-1), one per sample. Each class is
    shuffled once and dealt round-robin across the folds."""
    if k < 2:
        raise EvaluationError("cross-validation needs k >= 2")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    assignment = np.full(len(labels), -1)
    position = 0  # carried across classes so k up to n stays feasible
    for cls in (0, 1):
        idx = np.nonzero(labels == cls)[0]
        rng.shuffle(idx)
        for i in idx:
            assignment[i] = position % k
            position += 1
    for fold in range(k):
        test = assignment == fold
        if not test.any():
            raise EvaluationError(f"fold {fold} is empty; use a smaller k")
        train_labels = labels[~test]
        if len(np.unique(train_labels)) < 2:
            raise EvaluationError(
                f"training split for fold {fold} lacks a class; use a smaller k"
            )
    return assignment


def cross_validate(
    data: Dataset, kind: str, params, k: int, seed: int
) -> EvaluationReport:
    """Stratified k-fold: train on k-1 folds, predict the held-out fold, and
    aggregate the union of held-out predictions into one report."""
    if len(np.unique(data.labels)) < 2:
        raise EvaluationError("cross-validation needs both labels present")
    assignment = stratified_fold_assignments(data.labels, k, seed)
    predictions = np.full(data.n, -1)
    fold_accuracies = []
    for fold in range(k):
        test_idx = np.nonzero(assignment == fold)[0]
        train_idx = np.nonzero(assignment != fold)[0]
        model = train_classifier(kind, data.subset(train_idx), params)
        fold_preds = predict_labels(model, data.features[test_idx])
        predictions[test_idx] = fold_preds
        fold_accuracies.append(float((fold_preds == data.labels[test_idx]).mean()))
    return build_report(data.labels, predictions, fold_accuracies)


def stratified_holdout_split(
    labels: np.ndarray, test_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < test_fraction < 1.0:
        raise EvaluationError("holdout fraction must be in (0, 1)")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for cls in (0, 1):
        idx = np.nonzero(labels == cls)[0]
        rng.shuffle(idx)
        n_test = max(1, round(test_fraction * len(idx))) if len(idx) else 0
        test_parts.append(idx[:n_test])
        train_parts.append(idx[n_test:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise EvaluationError("holdout split produced an empty side")
    return train_idx, test_idx


def score_holdout(model, test: Dataset) -> EvaluationReport:
    """Confusion matrix and derived metrics of a trained model on a test set."""
    predictions = np.array(
        [1 if predict(model, x)[0] == ingest.LABEL_REAL else 0 for x in test.features]
    )
    return build_report(test.labels, predictions)


def evaluate_holdout(
    data: Dataset, kind: str, params, test_fraction: float, seed: int
) -> EvaluationReport:
    train_idx, test_idx = stratified_holdout_split(data.labels, test_fraction, seed)
    model = train_classifier(kind, data.subset(train_idx), params)
    return score_holdout(model, data.subset(test_idx))


# --- report filtering ---------------------------------------------------------


@dataclass
class FilterSummary:
    parsed: int = 0
    kept: int = 0
    dropped: int = 0
    per_category: dict[str, dict[str, int]] = field(default_factory=dict)
    flagged: list[tuple[int, str]] = field(default_factory=list)  # (index, reason)

    @property
    def flagged_count(self) -> int:
        return len(self.flagged)

    def to_dict(self) -> dict:
        return {
            "parsed": self.parsed,
            "kept": self.kept,
            "dropped": self.dropped,
            "flagged": self.flagged_count,
            "per_category": self.per_category,
            "flagged_instances": [
                {"index": i, "reason": r} for i, r in self.flagged
            ],
        }


def filter_report(
    report_bytes: bytes,
    source_root: str | Path,
    embed_model: EmbeddingModel,
    classifier,
    threshold: float,
    type_map: dict[str, str] | None = None,
) -> tuple[bytes, FilterSummary]:
    """Drop warnings whose keep score falls below ``threshold``; emit the
    survivors in the same XML schema. Fail-open: any warning the pipeline
    cannot score (unmapped type, missing lines, failed extraction) is kept
    and flagged in the summary. ``kept + dropped + flagged == parsed``."""
    if embed_model.dim != classifier.n_features:
        raise EvaluationError(
            f"embedding dimension {embed_model.dim} does not match "
            f"classifier dimension {classifier.n_features}"
        )
    if type_map is None:
        type_map = ingest.load_type_map()
    root = ingest.parse_xml_root(report_bytes)
    summary = FilterSummary()
    to_remove = []
    for index, element, record, reason in ingest.iter_instances(root, type_map):
        summary.parsed += 1
        if record is None:
            summary.flagged.append((index, reason))
            continue
        try:
            ingest.extract_snippet(source_root, record)
        except ingest.IngestError as exc:
            summary.flagged.append((index, str(exc)))
            continue
        features = embed_average(embed_model, tokenize(record.code_block))
        score = prob_real(classifier, features)
        bucket = summary.per_category.setdefault(
            record.category_code, {"kept": 0, "dropped": 0}
        )
        if score < threshold:
            summary.dropped += 1
            bucket["dropped"] += 1
            to_remove.append(element)
        else:
            summary.kept += 1
            bucket["kept"] += 1
    for element in to_remove:
        root.remove(element)
    payload = ET.tostring(root, encoding="utf-8", xml_declaration=True)
    return payload, summary


# --- featurization helpers -----------------------------------------------------


def featurize_samples(samples, embed_model: EmbeddingModel) -> Dataset:
    """Tokenize and embed every sample, producing an aligned Dataset."""
    for s in samples:
        s.tokens = tokenize(s.warning.code_block)
        s.features = embed_average(embed_model, s.tokens)
    return Dataset.from_samples(samples)


# --- report serialization -------------------------------------------------------


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else repr(value)


def report_kv_lines(report: EvaluationReport) -> list[str]:
    lines = [
        f"n_samples\t{report.total}",
        f"accuracy\t{report.accuracy!r}",
        f"confusion.tp\t{report.tp}",
        f"confusion.fp\t{report.fp}",
        f"confusion.tn\t{report.tn}",
        f"confusion.fn\t{report.fn}",
        f"precision.real\t{_fmt(report.precision_real)}",
        f"recall.real\t{_fmt(report.recall_real)}",
        f"precision.spurious\t{_fmt(report.precision_spurious)}",
        f"recall.spurious\t{_fmt(report.recall_spurious)}",
        f"fp_before\t{report.fp_before}",
        f"fp_after\t{report.fp_after}",
        f"fp_rate_before\t{report.fp_rate_before!r}",
        f"fp_rate_after\t{report.fp_rate_after!r}",
    ]
    if report.fold_accuracies is not None:
        lines.append(
            "fold_accuracies\t" + ",".join(repr(a) for a in report.fold_accuracies)
        )
    return lines


def write_report_kv(report: EvaluationReport, path: str | Path) -> None:
    Path(path).write_text("\n".join(report_kv_lines(report)) + "\n", encoding="utf-8")


def format_report_text(report: EvaluationReport, title: str = "") -> str:
    def pct(value: float | None) -> str:
        return "   n/a" if value is None else f"{100 * value:6.2f}"

    lines = []
    if title:
        lines += [title, "=" * len(title)]
    lines += [
        f"samples evaluated : {report.total}",
        f"accuracy          : {pct(report.accuracy)} %",
        "",
        "                     actual REAL   actual SPURIOUS",
        f"predicted REAL     {report.tp:11d}   {report.fp:15d}",
        f"predicted SPURIOUS {report.fn:11d}   {report.tn:15d}",
        "",
        f"precision REAL     : {pct(report.precision_real)} %",
        f"recall REAL        : {pct(report.recall_real)} %",
        f"precision SPURIOUS : {pct(report.precision_spurious)} %",
        f"recall SPURIOUS    : {pct(report.recall_spurious)} %",
        "",
        f"false positives before filtering : {report.fp_before} "
        f"({pct(report.fp_rate_before).strip()} % of warnings)",
        f"false positives after filtering  : {report.fp_after} "
        f"({pct(report.fp_rate_after).strip()} % of warnings)",
    ]
    if report.fold_accuracies is not None:
        folds = ", ".join(f"{a:.4f}" for a in report.fold_accuracies)
        lines.append(f"per-fold accuracy                : {folds}")
    return "\n".join(lines) + "\n"


def write_report_text(report: EvaluationReport, path: str | Path, title: str = "") -> None:
    Path(path).write_text(format_report_text(report, title), encoding="utf-8")
