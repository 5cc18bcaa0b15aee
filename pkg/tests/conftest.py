import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sast_triage import ingest
from sast_triage.embedding import EmbeddingHyperparams, train_embeddings
from sast_triage.evaluation import featurize_samples
from sast_triage.lexer import tokenize

REPO_ROOT = Path(__file__).resolve().parent.parent
MINI_BENCHMARK = REPO_ROOT / "fixtures" / "mini-benchmark"
MINI_REPORT = MINI_BENCHMARK / "findsecbugs-report.xml"
MINI_TRUTH = MINI_BENCHMARK / "expectedresults.csv"
MINI_SOURCE_ROOT = MINI_BENCHMARK / "src" / "main" / "java"

# SVM settings the mini corpus is evaluated with: the Pegasos defaults
# (lam=1e-4, 50 epochs) are tuned for benchmark-scale data and underfit a
# 46-sample corpus.
MINI_SVM_LAMBDA = 1e-3
MINI_SVM_EPOCHS = 200


@pytest.fixture(scope="session")
def mini_samples():
    """Labeled samples of the bundled mini benchmark, blocks extracted."""
    parsed = ingest.parse_report(MINI_REPORT.read_bytes())
    truth = ingest.parse_ground_truth(MINI_TRUTH.read_bytes())
    for record in parsed.records:
        ingest.extract_snippet(MINI_SOURCE_ROOT, record)
    samples, _ = ingest.join_labels(parsed.records, truth)
    return samples


@pytest.fixture(scope="session")
def mini_embedding(mini_samples):
    corpus = [tokenize(s.warning.code_block) for s in mini_samples]
    return train_embeddings(corpus, EmbeddingHyperparams(seed=42, dim=10))


@pytest.fixture(scope="session")
def mini_dataset(mini_samples, mini_embedding):
    return featurize_samples(mini_samples, mini_embedding)
