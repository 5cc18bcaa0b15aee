import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sast_triage.embedding import (
    EmbeddingError,
    EmbeddingHyperparams,
    EmbeddingIOError,
    embed_average,
    load_model,
    negative_sampling_gradients,
    negative_sampling_loss,
    pair_score,
    save_model,
    train_embeddings,
)

TOY_CORPUS = [["a", "b"]] * 50 + [["x", "x"]] * 50


def toy_model(dim=10, epochs=200, seed=42):
    hp = EmbeddingHyperparams(seed=seed, dim=dim, window=1, epochs=epochs)
    return train_embeddings(TOY_CORPUS, hp)


class TestTraining:
    def test_cooccurring_pair_outscores_unknown_context(self):
        model = toy_model()
        assert pair_score(model, "a", "b") > pair_score(model, "a", "x")

    def test_cooccurrence_margin(self):
        # p,q always co-occur; r co-occurs only with itself
        model = toy_model()
        assert pair_score(model, "a", "b") - pair_score(model, "a", "x") >= 0.2

    def test_vector_shapes_and_finiteness(self):
        model = toy_model(dim=10, epochs=5)
        for token in ("a", "b", "x"):
            vec = model.vector(token)
            assert vec.shape == (10,)
            assert np.isfinite(vec).all()
        assert np.isfinite(model.context_vectors).all()

    def test_determinism_same_seed(self):
        m1 = toy_model(epochs=10)
        m2 = toy_model(epochs=10)
        assert m1.vocab == m2.vocab
        np.testing.assert_array_equal(m1.vectors, m2.vectors)
        np.testing.assert_array_equal(m1.context_vectors, m2.context_vectors)

    def test_different_seed_changes_vectors(self):
        m1 = toy_model(epochs=5, seed=1)
        m2 = toy_model(epochs=5, seed=2)
        assert not np.array_equal(m1.vectors, m2.vectors)

    def test_min_count_filters_vocab(self):
        corpus = [["common", "common", "rare"]]
        hp = EmbeddingHyperparams(seed=0, dim=4, min_count=2)
        model = train_embeddings(corpus, hp)
        assert set(model.vocab) == {"common"}

    def test_empty_vocabulary_is_an_error(self):
        hp = EmbeddingHyperparams(seed=0, dim=4, min_count=5)
        with pytest.raises(EmbeddingError, match="vocabulary"):
            train_embeddings([["once"]], hp)

    @pytest.mark.parametrize("field,value", [("dim", 0), ("window", 0), ("epochs", -1)])
    def test_non_positive_hyperparams_rejected(self, field, value):
        hp = EmbeddingHyperparams(seed=0, **{field: value})
        with pytest.raises(EmbeddingError):
            train_embeddings(TOY_CORPUS, hp)

    def test_fingerprint_tracks_corpus(self):
        m1 = toy_model(epochs=1)
        hp = EmbeddingHyperparams(seed=42, dim=10, window=1, epochs=1)
        m2 = train_embeddings([["a", "b"]] * 49 + [["x", "x"]] * 51, hp)
        assert m1.corpus_fingerprint != m2.corpus_fingerprint


class TestGradients:
    def test_analytic_gradients_match_finite_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            dim = 8
            center = rng.normal(size=dim)
            context = rng.normal(size=dim)
            negatives = rng.normal(size=(5, dim))
            g_center, g_context, g_negs = negative_sampling_gradients(center, context, negatives)

            eps = 1e-6

            def check(vec, grad, rebuild):
                for i in range(dim):
                    bumped_hi = vec.copy()
                    bumped_hi[i] += eps
                    bumped_lo = vec.copy()
                    bumped_lo[i] -= eps
                    numeric = (rebuild(bumped_hi) - rebuild(bumped_lo)) / (2 * eps)
                    denom = max(abs(numeric), abs(grad[i]), 1e-8)
                    assert abs(numeric - grad[i]) / denom <= 1e-4

            check(center, g_center, lambda v: negative_sampling_loss(v, context, negatives))
            check(context, g_context, lambda v: negative_sampling_loss(center, v, negatives))
            for k in range(len(negatives)):
                def loss_with_neg(v, k=k):
                    negs = negatives.copy()
                    negs[k] = v
                    return negative_sampling_loss(center, context, negs)
                check(negatives[k], g_negs[k], loss_with_neg)

    def test_loss_is_positive(self):
        rng = np.random.default_rng(0)
        loss = negative_sampling_loss(
            rng.normal(size=4), rng.normal(size=4), rng.normal(size=(3, 4))
        )
        assert loss > 0


class TestEmbedAverage:
    def test_single_known_token_returns_its_vector(self):
        model = toy_model(epochs=2)
        fv = embed_average(model, ["a"])
        np.testing.assert_array_equal(fv.values, model.vector("a"))
        assert fv.n_known_tokens == 1

    def test_multiplicity_counts(self):
        model = toy_model(epochs=2)
        fv = embed_average(model, ["a", "a", "b"])
        expected = (2 * model.vector("a") + model.vector("b")) / 3
        np.testing.assert_allclose(fv.values, expected, rtol=0, atol=0)

    def test_all_oov_gives_zero_vector(self):
        model = toy_model(epochs=2)
        fv = embed_average(model, ["nope", "nada"])
        assert fv.n_known_tokens == 0
        np.testing.assert_array_equal(fv.values, np.zeros(model.dim))

    def test_oov_tokens_are_skipped_not_counted(self):
        model = toy_model(epochs=2)
        fv = embed_average(model, ["a", "mystery"])
        np.testing.assert_array_equal(fv.values, model.vector("a"))
        assert fv.n_known_tokens == 1

    @given(st.permutations(["a", "b", "x", "a", "b"]))
    @settings(max_examples=30)
    def test_permutation_invariance(self, tokens):
        model = _cached_toy()
        base = embed_average(model, ["a", "b", "x", "a", "b"])
        fv = embed_average(model, list(tokens))
        np.testing.assert_allclose(fv.values, base.values, atol=1e-12)

    def test_mean_bounds(self):
        model = _cached_toy()
        tokens = ["a", "b", "x", "b"]
        fv = embed_average(model, tokens)
        stacked = np.stack([model.vector(t) for t in tokens])
        assert (fv.values >= stacked.min(axis=0) - 1e-12).all()
        assert (fv.values <= stacked.max(axis=0) + 1e-12).all()


_TOY_CACHE = {}


def _cached_toy():
    if "model" not in _TOY_CACHE:
        _TOY_CACHE["model"] = toy_model(epochs=5)
    return _TOY_CACHE["model"]


class TestModelFile:
    def test_round_trip_identity(self, tmp_path):
        model = toy_model(epochs=3)
        path = tmp_path / "embed.bin"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.hyperparams == model.hyperparams
        assert loaded.vocab == model.vocab
        assert loaded.corpus_fingerprint == model.corpus_fingerprint
        np.testing.assert_array_equal(loaded.vectors, model.vectors)
        np.testing.assert_array_equal(loaded.context_vectors, model.context_vectors)

    def test_save_is_byte_deterministic(self, tmp_path):
        model = toy_model(epochs=3)
        save_model(model, tmp_path / "a.bin")
        save_model(model, tmp_path / "b.bin")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_empty_input_is_an_error(self, tmp_path):
        path = tmp_path / "empty.bin"
        path.write_bytes(b"")
        with pytest.raises(EmbeddingIOError):
            load_model(path)

    def test_version_mismatch_names_versions(self, tmp_path):
        model = toy_model(epochs=1)
        path = tmp_path / "embed.bin"
        save_model(model, path)
        data = bytearray(path.read_bytes())
        data[len(b"sast-triage-embed v")] = ord("9")  # flip the version digit
        path.write_bytes(bytes(data))
        with pytest.raises(EmbeddingIOError) as exc_info:
            load_model(path)
        message = str(exc_info.value)
        assert "sast-triage-embed v1" in message and "v9" in message

    def test_truncated_payload_is_an_error(self, tmp_path):
        model = toy_model(epochs=1)
        path = tmp_path / "embed.bin"
        save_model(model, path)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(EmbeddingIOError, match="bytes"):
            load_model(path)
