"""Skip-gram token embeddings with negative sampling, trained from scratch,
plus the mean-vector featurizer that turns a code block into one vector.

Training is plain SGD over (center, context) pairs: positives are the
context tokens inside the window, negatives are drawn from the unigram
distribution raised to 3/4. The learning rate decays linearly from its
initial value down to 1e-4 of it over all (epoch, pair) steps. Single
threaded and bit-reproducible for a fixed seed and corpus.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

MODEL_HEADER = b"sast-triage-embed v1"
_MIN_LR_FRACTION = 1e-4
_NEG_BUFFER = 65536


class EmbeddingError(Exception):
    pass


class EmbeddingIOError(EmbeddingError):
    pass


@dataclass
class EmbeddingHyperparams:
    seed: int
    dim: int = 10
    window: int = 5
    epochs: int = 15
    negatives: int = 5
    learning_rate: float = 0.025
    min_count: int = 1


@dataclass
class FeatureVector:
    values: np.ndarray
    n_known_tokens: int


@dataclass
class EmbeddingModel:
    hyperparams: EmbeddingHyperparams
    vocab: dict[str, int]  # token -> row index
    vectors: np.ndarray  # (V, dim) center/input vectors, used at inference
    context_vectors: np.ndarray  # (V, dim) output vectors, training only
    corpus_fingerprint: str

    @property
    def dim(self) -> int:
        return self.hyperparams.dim

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab[token]]


def _sigmoid(x: float) -> float:
    # branch keeps exp() in the underflow-safe half
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def corpus_fingerprint(corpus: list[list[str]]) -> str:
    h = hashlib.sha256()
    for seq in corpus:
        h.update("\x1f".join(seq).encode("utf-8"))
        h.update(b"\x1e")
    return h.hexdigest()


def train_embeddings(
    corpus: list[list[str]], hyperparams: EmbeddingHyperparams
) -> EmbeddingModel:
    """Train skip-gram embeddings on the token corpus.

    Center vectors start uniform in [-0.5/dim, 0.5/dim], context vectors at
    zero. Negatives equal to the positive context token are skipped rather
    than redrawn, so the random stream stays aligned across runs.
    """
    hp = hyperparams
    if hp.dim <= 0 or hp.window <= 0 or hp.epochs <= 0:
        raise EmbeddingError("dim, window and epochs must all be positive")
    if hp.negatives < 1:
        raise EmbeddingError("negative-sample count must be at least 1")
    if hp.min_count < 1:
        raise EmbeddingError("min token count must be at least 1")

    counts: dict[str, int] = {}
    for seq in corpus:
        for tok in seq:
            counts[tok] = counts.get(tok, 0) + 1
    # frequency-descending, then lexicographic: a deterministic index order
    vocab_tokens = sorted(
        (t for t, c in counts.items() if c >= hp.min_count),
        key=lambda t: (-counts[t], t),
    )
    if not vocab_tokens:
        raise EmbeddingError("vocabulary is empty after min-count filtering")
    vocab = {tok: i for i, tok in enumerate(vocab_tokens)}
    vocab_size = len(vocab)

    sequences = [
        [vocab[t] for t in seq if t in vocab] for seq in corpus
    ]
    sequences = [s for s in sequences if s]

    pairs_per_epoch = 0
    for seq in sequences:
        length = len(seq)
        for pos in range(length):
            pairs_per_epoch += min(pos, hp.window) + min(length - 1 - pos, hp.window)
    total_steps = pairs_per_epoch * hp.epochs

    rng = np.random.default_rng(hp.seed)
    vectors = (rng.random((vocab_size, hp.dim)) - 0.5) / hp.dim
    context_vectors = np.zeros((vocab_size, hp.dim))

    freqs = np.array([counts[t] for t in vocab_tokens], dtype=np.float64)
    noise = freqs ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    neg_buffer = np.empty(0, dtype=np.int64)
    neg_pos = 0

    def draw_negatives(k: int) -> np.ndarray:
        nonlocal neg_buffer, neg_pos
        if neg_pos + k > len(neg_buffer):
            draws = rng.random(_NEG_BUFFER)
            neg_buffer = np.minimum(
                np.searchsorted(noise_cdf, draws, side="right"), vocab_size - 1
            )
            neg_pos = 0
        out = neg_buffer[neg_pos : neg_pos + k]
        neg_pos += k
        return out

    lr0 = hp.learning_rate
    step = 0
    for _ in range(hp.epochs):
        for seq in sequences:
            length = len(seq)
            for pos in range(length):
                center = seq[pos]
                lo = max(0, pos - hp.window)
                hi = min(length, pos + hp.window + 1)
                for j in range(lo, hi):
                    if j == pos:
                        continue
                    target = seq[j]
                    lr = lr0 * max(_MIN_LR_FRACTION, 1.0 - step / total_steps)
                    v = vectors[center]
                    accum = np.zeros(hp.dim)
                    # positive pair
                    u = context_vectors[target]
                    g = (_sigmoid(float(np.dot(v, u))) - 1.0) * lr
                    accum += g * u
                    context_vectors[target] = u - g * v
                    # negatives; a draw colliding with the target is skipped
                    for neg in draw_negatives(hp.negatives):
                        if neg == target:
                            continue
                        u = context_vectors[neg]
                        g = _sigmoid(float(np.dot(v, u))) * lr
                        accum += g * u
                        context_vectors[neg] = u - g * v
                    vectors[center] = v - accum
                    step += 1

    if not (np.isfinite(vectors).all() and np.isfinite(context_vectors).all()):
        raise EmbeddingError("training produced non-finite vectors; lower the learning rate")
    return EmbeddingModel(
        hyperparams=hp,
        vocab=vocab,
        vectors=vectors,
        context_vectors=context_vectors,
        corpus_fingerprint=corpus_fingerprint(corpus),
    )


def embed_average(model: EmbeddingModel, tokens: list[str]) -> FeatureVector:
    """Mean of the center vectors of in-vocabulary tokens (with multiplicity).

    Out-of-vocabulary tokens are skipped; an all-unknown sequence maps to the
    zero vector with ``n_known_tokens == 0``.
    """
    rows = [model.vocab[t] for t in tokens if t in model.vocab]
    if not rows:
        return FeatureVector(np.zeros(model.dim), 0)
    values = model.vectors[rows].mean(axis=0)
    return FeatureVector(values, len(rows))


def pair_score(model: EmbeddingModel, center: str, context: str) -> float:
    """Sigmoid score of (center, context) under the trained objective."""
    for tok in (center, context):
        if tok not in model.vocab:
            raise EmbeddingError(f"token {tok!r} is not in the vocabulary")
    return _sigmoid(
        float(
            np.dot(model.vectors[model.vocab[center]], model.context_vectors[model.vocab[context]])
        )
    )


# --- single-step loss/gradients (double-precision check mode) --------------


def negative_sampling_loss(
    center: np.ndarray, context: np.ndarray, negatives: np.ndarray
) -> float:
    """Loss of one (center, context, negatives) step:
    -log s(v.u) - sum_i log s(-v.n_i)."""
    loss = float(np.logaddexp(0.0, -np.dot(center, context)))
    for neg in negatives:
        loss += float(np.logaddexp(0.0, np.dot(center, neg)))
    return loss


def negative_sampling_gradients(
    center: np.ndarray, context: np.ndarray, negatives: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of ``negative_sampling_loss`` w.r.t. all inputs."""
    s_pos = _sigmoid(float(np.dot(center, context)))
    grad_center = (s_pos - 1.0) * context
    grad_context = (s_pos - 1.0) * center
    grad_negatives = np.empty_like(negatives)
    for i, neg in enumerate(negatives):
        s_neg = _sigmoid(float(np.dot(center, neg)))
        grad_center = grad_center + s_neg * neg
        grad_negatives[i] = s_neg * center
    return grad_center, grad_context, grad_negatives


# --- model file -------------------------------------------------------------
#
# Byte layout (documented in the README):
#   line 1: b"sast-triage-embed v1"
#   line 2: JSON metadata {corpus_fingerprint, dim, hyperparams, vocab_size}
#   next vocab_size lines: one token per line, in row order
#   raw payload: vocab_size*dim little-endian float64 center vectors
#                followed by the context vectors, both row-major


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    meta = {
        "corpus_fingerprint": model.corpus_fingerprint,
        "dim": model.dim,
        "hyperparams": asdict(model.hyperparams),
        "vocab_size": len(model.vocab),
    }
    tokens = sorted(model.vocab, key=model.vocab.get)
    with open(path, "wb") as fh:
        fh.write(MODEL_HEADER + b"\n")
        fh.write(json.dumps(meta, sort_keys=True).encode("utf-8") + b"\n")
        for tok in tokens:
            fh.write(tok.encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(model.vectors, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.context_vectors, dtype="<f8").tobytes())


def load_model(path: str | Path) -> EmbeddingModel:
    data = Path(path).read_bytes()
    header, _, rest = data.partition(b"\n")
    if header != MODEL_HEADER:
        found = header[:64].decode("utf-8", errors="replace") if header else "<empty>"
        raise EmbeddingIOError(
            f"expected header {MODEL_HEADER.decode()!r}, found {found!r}"
        )
    meta_line, _, rest = rest.partition(b"\n")
    try:
        meta = json.loads(meta_line)
    except json.JSONDecodeError as exc:
        raise EmbeddingIOError(f"unreadable model metadata: {exc}") from exc
    vocab_size, dim = meta["vocab_size"], meta["dim"]
    tokens = []
    for _ in range(vocab_size):
        tok, sep, rest = rest.partition(b"\n")
        if not sep:
            raise EmbeddingIOError("truncated vocabulary section")
        tokens.append(tok.decode("utf-8"))
    expected = 2 * vocab_size * dim * 8
    if len(rest) != expected:
        raise EmbeddingIOError(
            f"vector payload is {len(rest)} bytes, expected {expected}"
        )
    flat = np.frombuffer(rest, dtype="<f8")
    vectors = flat[: vocab_size * dim].reshape(vocab_size, dim).copy()
    context_vectors = flat[vocab_size * dim :].reshape(vocab_size, dim).copy()
    return EmbeddingModel(
        hyperparams=EmbeddingHyperparams(**meta["hyperparams"]),
        vocab={tok: i for i, tok in enumerate(tokens)},
        vectors=vectors,
        context_vectors=context_vectors,
        corpus_fingerprint=meta["corpus_fingerprint"],
    )
