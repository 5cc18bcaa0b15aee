"""sast-triage: learn to suppress false-positive SAST warnings.

Pipeline: parse a scanner's BugCollection report and the benchmark's
expected results, extract the flagged code blocks, tokenize them, train
skip-gram embeddings on the token corpus, represent each block as its mean
token vector, and classify blocks as real or spurious with a random forest,
a linear SVM, gradient-boosted trees, or their majority-vote ensemble.
"""

__version__ = "0.1.0"

from .classifiers import (  # noqa: F401
    Dataset,
    EnsembleModel,
    GbtModel,
    LinearSvmModel,
    RandomForestModel,
    ensemble_predict,
    load_classifier,
    predict,
    save_classifier,
    train_gbt,
    train_random_forest,
    train_svm,
)
from .embedding import (  # noqa: F401
    EmbeddingHyperparams,
    EmbeddingModel,
    FeatureVector,
    embed_average,
    load_model,
    save_model,
    train_embeddings,
)
from .evaluation import (  # noqa: F401
    EvaluationReport,
    cross_validate,
    filter_report,
    score_holdout,
)
from .ingest import (  # noqa: F401
    GroundTruthEntry,
    LabeledSample,
    WarningRecord,
    extract_snippet,
    join_labels,
    parse_ground_truth,
    parse_report,
)
from .lexer import tokenize  # noqa: F401
