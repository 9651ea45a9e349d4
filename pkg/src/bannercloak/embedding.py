"""Co-occurrence word embedding for banner vocabulary.

IoT banner words ("dcs-930l", "d-link") never appear in NLP dictionaries, so
similarity comes from the banners themselves: two words that appear in the
same banner are correlated.  Counts are factorized with a weighted
least-squares loss

    J = sum_ij f(P_ij) * (theta_i . theta_j + b_i + b_j - log P_ij)^2

over word pairs with nonzero same-banner co-occurrence counts P_ij, with the
usual capped-power weight f(x) = min(1, (x / x_max)^alpha).  Training is
plain full-batch gradient descent in float64 so the analytic gradient can be
checked against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .core import Banner, DataError, token_texts

FORMAT_TAG = "bannercloak-embedding"
FORMAT_VERSION = 1


@dataclass
class CooccurrenceEmbedding:
    vocab: dict[str, int]
    vectors: np.ndarray  # (|V|, d)
    biases: np.ndarray  # (|V|,)
    cooc: Optional[sparse.csr_matrix] = None
    loss_history: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.vocab[word]]

    def cosine(self, a: str, b: str) -> float:
        u, v = self.vector(a), self.vector(b)
        return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def build_cooccurrence(
    token_lists: Sequence[Sequence[str]],
) -> tuple[dict[str, int], sparse.csr_matrix]:
    """Count same-banner co-occurrence: P_ij += 1 whenever distinct words i
    and j both occur in one banner (symmetric; the window is the banner)."""
    vocab: dict[str, int] = {}
    for words in token_lists:
        for w in words:
            if w not in vocab:
                vocab[w] = len(vocab)
    rows: list[int] = []
    cols: list[int] = []
    for words in token_lists:
        idx = sorted({vocab[w] for w in words})
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                rows.append(idx[a])
                cols.append(idx[b])
    n = len(vocab)
    data = np.ones(len(rows), dtype=np.float64)
    upper = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    cooc = upper + upper.T  # symmetric by construction
    return vocab, cooc.tocsr()


def _pair_arrays(cooc: sparse.csr_matrix):
    coo = cooc.tocoo()
    return coo.row.astype(np.intp), coo.col.astype(np.intp), coo.data.astype(np.float64)


def _pair_dot(theta: np.ndarray, rows: np.ndarray, cols: np.ndarray, chunk: int = 1 << 18) -> np.ndarray:
    """theta[r] . theta[c] for every pair, chunked to bound temporaries."""
    out = np.empty(len(rows), dtype=np.float64)
    for s in range(0, len(rows), chunk):
        sl = slice(s, s + chunk)
        out[sl] = np.einsum("ij,ij->i", theta[rows[sl]], theta[cols[sl]])
    return out


def loss_and_grad(
    theta: np.ndarray,
    biases: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    counts: np.ndarray,
    alpha: float = 0.75,
    x_max: float = 100.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss over the given (unique) ordered pairs, plus analytic gradients."""
    weights = np.minimum(1.0, (counts / x_max) ** alpha)
    err = _pair_dot(theta, rows, cols) + biases[rows] + biases[cols] - np.log(counts)
    loss = float(weights @ (err * err))
    m = weights * err
    n = theta.shape[0]
    pair = sparse.csr_matrix((m, (rows, cols)), shape=(n, n))
    grad_theta = 2.0 * (pair @ theta + pair.T @ theta)
    row_sum = np.asarray(pair.sum(axis=1)).ravel()
    col_sum = np.asarray(pair.sum(axis=0)).ravel()
    grad_biases = 2.0 * (row_sum + col_sum)
    return loss, grad_theta, grad_biases


def train_embedding(
    corpus: Sequence[Banner],
    dim: int = 50,
    epochs: int = 60,
    lr: float = 0.1,
    seed: int = 0,
    alpha: float = 0.75,
    x_max: float = 100.0,
    min_count: int = 2,
) -> CooccurrenceEmbedding:
    """Fit the embedding by gradient descent on the weighted factorization
    loss.  Deterministic for a fixed seed; final loss is below the initial
    loss (the lr is backed off automatically if a step would overshoot).
    Words occurring fewer than ``min_count`` times are left out of the
    vocabulary: one-off noise tokens (session ids, timestamps) carry no
    reusable similarity signal."""
    if dim < 2:
        raise ValueError("embedding dimension must be >= 2")
    token_lists = [token_texts(b.raw) for b in corpus]
    token_lists = [t for t in token_lists if t]
    if not token_lists:
        raise DataError("corpus is empty after tokenization")
    if min_count > 1:
        totals: dict[str, int] = {}
        for words in token_lists:
            for w in words:
                totals[w] = totals.get(w, 0) + 1
        token_lists = [
            [w for w in words if totals[w] >= min_count] for words in token_lists
        ]
        token_lists = [t for t in token_lists if t]
    vocab, cooc = build_cooccurrence(token_lists)
    if len(vocab) < 2:
        raise DataError("vocabulary must contain at least 2 words")
    rows, cols, counts = _pair_arrays(cooc)

    # Small init so the first steps move along the count signal rather than
    # fighting initialization noise; per-parameter (AdaGrad) step sizes keep
    # full-batch descent stable without tuning the rate per corpus.
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal((len(vocab), dim)) * 0.02
    biases = np.zeros(len(vocab), dtype=np.float64)
    accum_theta = np.full_like(theta, 1e-8)
    accum_biases = np.full_like(biases, 1e-8)

    history = []
    loss, g_theta, g_biases = loss_and_grad(theta, biases, rows, cols, counts, alpha, x_max)
    history.append(loss)
    for _ in range(epochs):
        accum_theta += g_theta * g_theta
        accum_biases += g_biases * g_biases
        theta = theta - lr * g_theta / np.sqrt(accum_theta)
        biases = biases - lr * g_biases / np.sqrt(accum_biases)
        loss, g_theta, g_biases = loss_and_grad(theta, biases, rows, cols, counts, alpha, x_max)
        history.append(loss)

    # Remove the shared "every word is banner vocabulary" component so cosine
    # reflects what distinguishes words, not what all banners have in common.
    theta = theta - theta.mean(axis=0, keepdims=True)

    return CooccurrenceEmbedding(
        vocab=vocab, vectors=theta, biases=biases, cooc=cooc, loss_history=history
    )


def save_embedding(emb: CooccurrenceEmbedding, path) -> None:
    payload = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "dim": emb.dim,
        "vocab": list(emb.vocab),
        "vectors": [[round(float(x), 12) for x in row] for row in emb.vectors],
        "biases": [round(float(x), 12) for x in emb.biases],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=True, sort_keys=True)


def load_embedding(path) -> CooccurrenceEmbedding:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != FORMAT_TAG:
        raise DataError(f"{path}: not an embedding file")
    if payload.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported embedding version {payload.get('version')}")
    vocab = {w: i for i, w in enumerate(payload["vocab"])}
    return CooccurrenceEmbedding(
        vocab=vocab,
        vectors=np.asarray(payload["vectors"], dtype=np.float64),
        biases=np.asarray(payload["biases"], dtype=np.float64),
    )
