import numpy as np
import pytest

import bannercloak as bc
from bannercloak.core import DataError
from bannercloak.embedding import build_cooccurrence, loss_and_grad


def test_cooccurrence_counts_same_banner_pairs():
    vocab, cooc = build_cooccurrence([["a", "b", "c"], ["a", "b"], ["a", "a", "b"]])
    a, b, c = vocab["a"], vocab["b"], vocab["c"]
    dense = cooc.toarray()
    assert dense[a, b] == 3  # duplicates inside one banner count once
    assert dense[a, c] == 1
    assert dense[b, c] == 1
    assert np.all(np.diag(dense) == 0)


def test_cooccurrence_symmetry_random_corpora():
    rng = np.random.default_rng(5)
    words = [f"w{i}" for i in range(12)]
    for _ in range(20):
        lists = [
            [words[i] for i in rng.integers(0, 12, size=rng.integers(1, 8))]
            for _ in range(6)
        ]
        _, cooc = build_cooccurrence(lists)
        assert (cooc != cooc.T).nnz == 0


def test_gradient_matches_central_differences():
    """Analytic gradient against finite differences on a 5-word vocabulary."""
    token_lists = [["a", "b", "c"], ["a", "b"], ["c", "d", "e"], ["a", "e"]]
    vocab, cooc = build_cooccurrence(token_lists)
    assert len(vocab) == 5
    coo = cooc.tocoo()
    rows, cols, counts = coo.row, coo.col, coo.data.astype(float)
    rng = np.random.default_rng(3)
    theta = rng.standard_normal((5, 4))
    biases = rng.standard_normal(5)
    _, g_theta, g_biases = loss_and_grad(theta, biases, rows, cols, counts)

    eps = 1e-6

    def loss_at(th, bi):
        return loss_and_grad(th, bi, rows, cols, counts)[0]

    for i in range(5):
        for j in range(4):
            up, down = theta.copy(), theta.copy()
            up[i, j] += eps
            down[i, j] -= eps
            fd = (loss_at(up, biases) - loss_at(down, biases)) / (2 * eps)
            assert abs(fd - g_theta[i, j]) <= 1e-4 * max(1e-8, abs(fd))
        up, down = biases.copy(), biases.copy()
        up[i] += eps
        down[i] -= eps
        fd = (loss_at(theta, up) - loss_at(theta, down)) / (2 * eps)
        assert abs(fd - g_biases[i]) <= 1e-4 * max(1e-8, abs(fd))


def test_training_loss_decreases(cooc_fixture_corpus):
    emb = bc.train_embedding(cooc_fixture_corpus, dim=8, epochs=10, seed=0, min_count=1)
    history = emb.loss_history
    assert history[1] < history[0]  # strict decrease over the first epoch
    assert history[-1] < history[0]


def test_cooccurrence_similarity_ordering(cooc_fixture_corpus):
    emb = bc.train_embedding(cooc_fixture_corpus, dim=8, epochs=60, seed=0, min_count=1)
    assert emb.cosine("dcs-930l", "d-link") > emb.cosine("dcs-930l", "hp")


def test_train_embedding_input_validation():
    with pytest.raises(DataError):
        bc.train_embedding([], dim=4)
    one_word = [bc.Banner("x", "http", "hello hello")]
    with pytest.raises(DataError):
        bc.train_embedding(one_word, dim=4, min_count=1)
    with pytest.raises(ValueError):
        bc.train_embedding([bc.Banner("x", "http", "a b")], dim=1, min_count=1)


def test_embedding_round_trip(tmp_path, cooc_fixture_corpus):
    emb = bc.train_embedding(cooc_fixture_corpus, dim=6, epochs=5, seed=1, min_count=1)
    path = tmp_path / "emb.json"
    bc.save_embedding(emb, path)
    loaded = bc.load_embedding(path)
    assert loaded.vocab == emb.vocab
    assert np.allclose(loaded.vectors, emb.vectors, atol=1e-9)
    assert np.allclose(loaded.biases, emb.biases, atol=1e-9)


def test_embedding_determinism(cooc_fixture_corpus):
    emb1 = bc.train_embedding(cooc_fixture_corpus, dim=6, epochs=8, seed=4, min_count=1)
    emb2 = bc.train_embedding(cooc_fixture_corpus, dim=6, epochs=8, seed=4, min_count=1)
    assert emb1.vocab == emb2.vocab
    assert np.array_equal(emb1.vectors, emb2.vectors)
