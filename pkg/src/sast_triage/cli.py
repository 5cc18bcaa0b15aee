"""Command-line surface tying the pipeline together:

  sast-triage ingest    parse report + truth, extract code, write dataset
  sast-triage train     train embeddings and classifiers from a dataset
  sast-triage evaluate  cross-validate / holdout-score models, write reports
  sast-triage filter    apply trained models to suppress warnings in a report
  sast-triage inspect   dump tokens / feature vector for one dataset row

Flags can come from a JSON config file (--config); explicit flags win. The
master seed has no default: commands that train refuse to run without one.
Exit codes: 0 success, 1 processing error, 2 usage error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation, ingest
from .classifiers import (
    ClassifierError,
    EnsembleModel,
    EnsembleParams,
    GbtParams,
    RandomForestParams,
    SvmParams,
    load_classifier,
    save_classifier,
    train_gbt,
    train_random_forest,
    train_svm,
)
from .embedding import (
    EmbeddingError,
    EmbeddingHyperparams,
    embed_average,
    load_model,
    save_model,
    train_embeddings,
)
from .lexer import tokenize

DEFAULT_DIMS = "10,20,30"
DEFAULT_MODELS = "rf,svm,gbt,ensemble"


class UsageError(Exception):
    pass


class _Resolver:
    """flag > config file > default"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = {}
        if getattr(args, "config", None):
            path = Path(args.config)
            if not path.is_file():
                raise UsageError(f"config file not found: {path}")
            try:
                self.config = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise UsageError(f"config file {path} is not valid JSON: {exc}")
            if not isinstance(self.config, dict):
                raise UsageError(f"config file {path} must hold a JSON object")

    def get(self, key: str, default=None, required: bool = False, cast=None):
        value = getattr(self.args, key, None)
        if value is None:
            value = self.config.get(key, default)
        if value is None and required:
            raise UsageError(f"missing required option --{key.replace('_', '-')}")
        if value is not None and cast is not None:
            value = cast(value)
        return value


def _require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise UsageError(f"{what} not found: {path}")
    return path


def _require_dir(path: Path, what: str) -> Path:
    if not path.is_dir():
        raise UsageError(f"{what} not found: {path}")
    return path


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}")


def _parse_models(text: str) -> list[str]:
    kinds = [part.strip() for part in str(text).split(",") if part.strip()]
    for kind in kinds:
        if kind not in evaluation.MODEL_KINDS:
            raise UsageError(
                f"unknown model kind {kind!r}; choose from {', '.join(evaluation.MODEL_KINDS)}"
            )
    return kinds


def embedding_path(workspace: Path, dim: int) -> Path:
    return workspace / f"embedding-dim{dim}.bin"


def classifier_path(workspace: Path, kind: str, dim: int) -> Path:
    return workspace / f"model-{kind}-dim{dim}.bin"


def _load_dataset(res: _Resolver) -> tuple[list, Path]:
    workspace = Path(res.get("workspace", required=True))
    dataset_opt = res.get("dataset")
    dataset_path = Path(dataset_opt) if dataset_opt else workspace / "dataset.tsv"
    _require_file(dataset_path, "dataset file")
    return ingest.read_dataset(dataset_path), workspace


def _classifier_params(res: _Resolver, seed: int) -> dict:
    rf = RandomForestParams(
        seed=seed,
        n_trees=res.get("rf_trees", 100, cast=int),
        max_depth=res.get("rf_depth", 12, cast=int),
        features_per_split=res.get("rf_features", cast=int),
    )
    svm = SvmParams(
        seed=seed,
        lam=res.get("svm_lambda", 1e-4, cast=float),
        epochs=res.get("svm_epochs", 50, cast=int),
    )
    gbt = GbtParams(
        shrinkage=res.get("gbt_eta", 0.1, cast=float),
        n_rounds=res.get("gbt_rounds", 100, cast=int),
        max_depth=res.get("gbt_depth", 3, cast=int),
        leaf_penalty=res.get("gbt_leaf_penalty", 1.0, cast=float),
    )
    return {"rf": rf, "svm": svm, "gbt": gbt, "ensemble": EnsembleParams(rf, svm, gbt)}


# --- commands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    res = _Resolver(args)
    report_path = _require_file(Path(res.get("report", required=True)), "report file")
    truth_path = _require_file(Path(res.get("truth", required=True)), "ground-truth file")
    source_root = _require_dir(Path(res.get("source_root", required=True)), "source root")
    workspace = Path(res.get("workspace", required=True))
    workspace.mkdir(parents=True, exist_ok=True)
    type_map_opt = res.get("type_map")
    type_map = ingest.load_type_map(type_map_opt) if type_map_opt else None

    parsed = ingest.parse_report(report_path.read_bytes(), type_map)
    truth = ingest.parse_ground_truth(truth_path.read_bytes())
    for record in parsed.records:
        ingest.extract_snippet(source_root, record)
    samples, join_report = ingest.join_labels(parsed.records, truth)

    dataset_path = workspace / "dataset.tsv"
    ingest.write_dataset(samples, dataset_path)
    join_path = workspace / "join-report.json"
    join_path.write_text(
        json.dumps(
            {
                "instances": parsed.instance_count,
                "skipped": [
                    {"index": s.index, "type": s.vuln_type, "reason": s.reason}
                    for s in parsed.skipped
                ],
                "matched": join_report.matched,
                "unmatched_warnings": [
                    {"source_file": w.source_file, "category": w.category_code}
                    for w in join_report.unmatched_warnings
                ],
                "unmatched_truth": [
                    {"test_name": t.test_name, "category": t.category_code}
                    for t in join_report.unmatched_truth
                ],
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )

    n_real = sum(1 for s in samples if s.label == ingest.LABEL_REAL)
    print(f"report instances   : {parsed.instance_count}")
    print(f"parsed warnings    : {len(parsed.records)}")
    print(f"skipped instances  : {len(parsed.skipped)}")
    print(f"truth entries      : {len(truth)}")
    print(f"labeled samples    : {len(samples)} ({n_real} REAL, {len(samples) - n_real} SPURIOUS)")
    print(f"unmatched warnings : {len(join_report.unmatched_warnings)}")
    print(f"unmatched truth    : {len(join_report.unmatched_truth)}")
    print(f"dataset written    : {dataset_path}")
    return 0


def cmd_train(args) -> int:
    res = _Resolver(args)
    samples, workspace = _load_dataset(res)
    workspace.mkdir(parents=True, exist_ok=True)
    seed = res.get("seed", required=True, cast=int)
    dims = _parse_int_list(res.get("dims", DEFAULT_DIMS))
    kinds = _parse_models(res.get("models", DEFAULT_MODELS))
    if "ensemble" in kinds:
        missing = [k for k in ("rf", "svm", "gbt") if k not in kinds]
        if missing:
            raise UsageError(
                "the ensemble needs its three members trained too; "
                f"add {', '.join(missing)} to --models"
            )
    if not samples:
        raise ClassifierError("dataset is empty; nothing to train on")
    params = _classifier_params(res, seed)

    corpus = [tokenize(s.warning.code_block) for s in samples]
    for dim in dims:
        hp = EmbeddingHyperparams(
            seed=seed,
            dim=dim,
            window=res.get("window", 5, cast=int),
            epochs=res.get("epochs", 15, cast=int),
            negatives=res.get("negatives", 5, cast=int),
            learning_rate=res.get("learning_rate", 0.025, cast=float),
            min_count=res.get("min_count", 1, cast=int),
        )
        embed_model = train_embeddings(corpus, hp)
        out = embedding_path(workspace, dim)
        save_model(embed_model, out)
        print(f"embedding dim {dim}: vocabulary {len(embed_model.vocab)} -> {out}")

        data = evaluation.featurize_samples(samples, embed_model)
        trained = {}
        if "rf" in kinds:
            trained["rf"] = train_random_forest(data, params["rf"])
        if "svm" in kinds:
            trained["svm"] = train_svm(data, params["svm"])
        if "gbt" in kinds:
            trained["gbt"] = train_gbt(data, params["gbt"])
        if "ensemble" in kinds:
            trained["ensemble"] = EnsembleModel(
                rf=trained["rf"], svm=trained["svm"], gbt=trained["gbt"]
            )
        for kind in kinds:
            out = classifier_path(workspace, kind, dim)
            save_classifier(trained[kind], out)
            print(f"model {kind} dim {dim} -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    res = _Resolver(args)
    samples, workspace = _load_dataset(res)
    seed = res.get("seed", required=True, cast=int)
    dims = _parse_int_list(res.get("dims", DEFAULT_DIMS))
    kinds = _parse_models(res.get("models", DEFAULT_MODELS))
    protocol = res.get("protocol", "cv")
    if protocol not in ("cv", "holdout"):
        raise UsageError(f"unknown protocol {protocol!r}; choose cv or holdout")
    folds = res.get("folds", 5, cast=int)
    holdout_fraction = res.get("holdout_fraction", 0.2, cast=float)
    include_baseline = bool(res.get("include_baseline", False))
    params = _classifier_params(res, seed)

    figures_dir = workspace / "figures"
    figures_dir.mkdir(parents=True, exist_ok=True)
    from . import figures  # deferred: keeps matplotlib out of the other commands

    comparison: dict[str, dict[int, float]] = {}
    rows = []
    for dim in dims:
        embed_file = embedding_path(workspace, dim)
        _require_file(embed_file, f"embedding model for dim {dim} (run `train` first)")
        embed_model = load_model(embed_file)
        data = evaluation.featurize_samples(samples, embed_model)
        for kind in kinds:
            if protocol == "cv":
                report = evaluation.cross_validate(data, kind, params[kind], folds, seed)
            else:
                report = evaluation.evaluate_holdout(
                    data, kind, params[kind], holdout_fraction, seed
                )
            title = f"{kind} @ dim {dim} ({protocol})"
            evaluation.write_report_text(
                report, workspace / f"report-{kind}-dim{dim}.txt", title
            )
            evaluation.write_report_kv(report, workspace / f"report-{kind}-dim{dim}.kv")
            figures.save_confusion_matrix(
                report, figures_dir / f"confusion-{kind}-dim{dim}.png", title
            )
            comparison.setdefault(kind, {})[dim] = report.accuracy
            rows.append((kind, dim, report.accuracy))
            print(f"{kind:9s} dim {dim:3d}  accuracy {report.accuracy:.4f}")
        if include_baseline:
            labels = data.labels
            majority = 1 if labels.sum() * 2 > len(labels) else 0
            report = evaluation.constant_report(labels, majority)
            comparison.setdefault("baseline", {})[dim] = report.accuracy
            rows.append(("baseline", dim, report.accuracy))
            print(f"{'baseline':9s} dim {dim:3d}  accuracy {report.accuracy:.4f}")

    table_path = workspace / "comparison.tsv"
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("model\tdim\taccuracy\n")
        for kind, dim, accuracy in rows:
            fh.write(f"{kind}\t{dim}\t{accuracy!r}\n")
    figures.save_accuracy_comparison(comparison, figures_dir / "accuracy-comparison.png")
    print(f"comparison table   : {table_path}")
    print(f"figures            : {figures_dir}")
    return 0


def cmd_filter(args) -> int:
    res = _Resolver(args)
    report_path = _require_file(Path(res.get("report", required=True)), "report file")
    source_root = _require_dir(Path(res.get("source_root", required=True)), "source root")
    embed_file = _require_file(Path(res.get("embedding", required=True)), "embedding model")
    model_file = _require_file(Path(res.get("classifier", required=True)), "classifier model")
    output_path = Path(res.get("output", required=True))
    threshold = res.get("threshold", 0.5, cast=float)
    type_map_opt = res.get("type_map")
    type_map = ingest.load_type_map(type_map_opt) if type_map_opt else None

    embed_model = load_model(embed_file)
    classifier = load_classifier(model_file)
    if embed_model.dim != classifier.n_features:
        raise UsageError(
            f"embedding dimension {embed_model.dim} does not match classifier "
            f"dimension {classifier.n_features}"
        )
    payload, summary = evaluation.filter_report(
        report_path.read_bytes(), source_root, embed_model, classifier, threshold, type_map
    )
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_bytes(payload)
    summary_opt = res.get("summary")
    if summary_opt:
        Path(summary_opt).write_text(
            json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    print(f"parsed warnings : {summary.parsed}")
    print(f"kept            : {summary.kept}")
    print(f"dropped         : {summary.dropped}")
    print(f"flagged (kept)  : {summary.flagged_count}")
    for category in sorted(summary.per_category):
        bucket = summary.per_category[category]
        print(f"  {category:12s} kept {bucket['kept']:4d}  dropped {bucket['dropped']:4d}")
    print(f"filtered report : {output_path}")
    return 0


def cmd_inspect(args) -> int:
    res = _Resolver(args)
    samples, _ = _load_dataset(res)
    row = res.get("row", required=True, cast=int)
    if not 0 <= row < len(samples):
        raise UsageError(f"--row {row} out of range (dataset has {len(samples)} rows)")
    sample = samples[row]
    w = sample.warning
    print(f"source_file : {w.source_file}")
    print(f"category    : {w.category_code}")
    print(f"vuln_type   : {w.vuln_type}")
    print(f"label       : {sample.label}")
    print(f"spans       : {w.line_spans}")
    print("code block  :")
    for line in w.code_block.splitlines():
        print(f"  | {line}")
    tokens = tokenize(w.code_block)
    print(f"tokens ({len(tokens)}):")
    for token in tokens:
        print(token)
    embed_opt = res.get("embedding")
    if embed_opt:
        embed_model = load_model(_require_file(Path(embed_opt), "embedding model"))
        features = embed_average(embed_model, tokens)
        print(f"known tokens: {features.n_known_tokens}")
        print("vector      : " + " ".join(f"{v:+.6f}" for v in features.values))
    return 0


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sast-triage",
        description="Learn to suppress false-positive SAST warnings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; explicit flags win")
        p.add_argument("--workspace", help="directory for all produced artifacts")

    p = sub.add_parser("ingest", help="parse report + truth and build the labeled dataset")
    add_common(p)
    p.add_argument("--report", help="scanner report XML")
    p.add_argument("--truth", help="expected-results CSV")
    p.add_argument("--source-root", dest="source_root", help="root of the scanned sources")
    p.add_argument("--type-map", dest="type_map", help="override the bundled type->category table")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train embeddings and classifiers")
    add_common(p)
    p.add_argument("--dataset", help="labeled dataset file (default: workspace/dataset.tsv)")
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--dims", help=f"embedding dimensions, comma separated (default {DEFAULT_DIMS})")
    p.add_argument("--models", help=f"model kinds to train (default {DEFAULT_MODELS})")
    p.add_argument("--window", type=int, help="context window (default 5)")
    p.add_argument("--epochs", type=int, help="embedding epochs (default 15)")
    p.add_argument("--negatives", type=int, help="negative samples per pair (default 5)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float, help="initial learning rate (default 0.025)")
    p.add_argument("--min-count", dest="min_count", type=int, help="min token count (default 1)")
    _add_classifier_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score models and write reports + figures")
    add_common(p)
    p.add_argument("--dataset", help="labeled dataset file (default: workspace/dataset.tsv)")
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--dims", help=f"dimensions to evaluate (default {DEFAULT_DIMS})")
    p.add_argument("--models", help=f"model kinds to evaluate (default {DEFAULT_MODELS})")
    p.add_argument("--protocol", choices=("cv", "holdout"), help="evaluation protocol (default cv)")
    p.add_argument("--folds", type=int, help="folds for cv (default 5)")
    p.add_argument("--holdout-fraction", dest="holdout_fraction", type=float, help="test fraction for holdout (default 0.2)")
    p.add_argument("--include-baseline", dest="include_baseline", action="store_const", const=True, help="add the majority-class constant predictor")
    _add_classifier_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("filter", help="suppress predicted-spurious warnings in a report")
    add_common(p)
    p.add_argument("--report", help="scanner report XML to filter")
    p.add_argument("--source-root", dest="source_root", help="root of the scanned sources")
    p.add_argument("--embedding", help="trained embedding model file")
    p.add_argument("--classifier", help="trained classifier file")
    p.add_argument("--threshold", type=float, help="keep score threshold in [0,1] (default 0.5)")
    p.add_argument("--output", help="path for the filtered XML report")
    p.add_argument("--summary", help="optional path for a JSON filter summary")
    p.add_argument("--type-map", dest="type_map", help="override the bundled type->category table")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("inspect", help="dump tokens / vector for one dataset row")
    add_common(p)
    p.add_argument("--dataset", help="labeled dataset file (default: workspace/dataset.tsv)")
    p.add_argument("--row", type=int, help="0-based dataset row to inspect")
    p.add_argument("--embedding", help="embedding model file (prints the feature vector)")
    p.set_defaults(func=cmd_inspect)
    return parser


def _add_classifier_flags(p) -> None:
    p.add_argument("--rf-trees", dest="rf_trees", type=int, help="forest size (default 100)")
    p.add_argument("--rf-depth", dest="rf_depth", type=int, help="forest max depth (default 12)")
    p.add_argument("--rf-features", dest="rf_features", type=int, help="features per split (default ceil(sqrt(d)))")
    p.add_argument("--svm-lambda", dest="svm_lambda", type=float, help="SVM regularization (default 1e-4)")
    p.add_argument("--svm-epochs", dest="svm_epochs", type=int, help="SVM epochs (default 50)")
    p.add_argument("--gbt-eta", dest="gbt_eta", type=float, help="boosting shrinkage (default 0.1)")
    p.add_argument("--gbt-rounds", dest="gbt_rounds", type=int, help="boosting rounds (default 100)")
    p.add_argument("--gbt-depth", dest="gbt_depth", type=int, help="boosting tree depth (default 3)")
    p.add_argument("--gbt-leaf-penalty", dest="gbt_leaf_penalty", type=float, help="leaf L2 penalty (default 1.0)")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        ingest.IngestError,
        EmbeddingError,
        ClassifierError,
        evaluation.EvaluationError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
