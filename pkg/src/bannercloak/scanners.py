"""The two fingerprinting scanners the attacks target.

The learning-based scanner is a linear bag-of-tokens softmax classifier
behind the score interface every attack consumes: ``predict(text)`` returns
the argmax label and the full per-label confidence vector.  Anything that
exposes the same interface (a CNN, an external service) can be dropped in.

The matching-based scanner is an ordered ruleset of ``pattern -> label``
entries, the unified form real tools (Nmap-style probes, keyword databases)
reduce to.  It returns no scores, so evading it goes through a shadow model:
a learning scanner trained to imitate the ruleset's labeling.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .core import Banner, DataError, token_texts

SCANNER_FORMAT = "bannercloak-scanner"
SCANNER_VERSION = 1
RULESET_FORMAT_KINDS = ("regex", "literal")


@dataclass
class TrainConfig:
    lr: float = 0.5
    epochs: int = 300
    seed: int = 0
    holdout: float = 0.2
    l2: float = 1e-4


@dataclass
class LearningScanner:
    labels: list[str]
    granularity: str
    vocab: dict[str, int]
    weights: np.ndarray  # (n_labels, n_features)
    bias: np.ndarray  # (n_labels,)
    holdout_accuracy: Optional[float] = None

    def features(self, text: str) -> dict[int, float]:
        counts: dict[int, float] = {}
        for word in token_texts(text):
            idx = self.vocab.get(word)
            if idx is not None:  # out-of-vocabulary tokens contribute nothing
                counts[idx] = counts.get(idx, 0.0) + 1.0
        return counts

    def confidence(self, text: str) -> np.ndarray:
        counts = self.features(text)
        logits = self.bias.copy()
        if counts:
            idx = np.fromiter(counts.keys(), dtype=np.intp, count=len(counts))
            vals = np.fromiter(counts.values(), dtype=np.float64, count=len(counts))
            logits = logits + self.weights[:, idx] @ vals
        return _softmax(logits)

    def predict(self, text: str) -> tuple[str, np.ndarray]:
        probs = self.confidence(text)
        return self.labels[int(np.argmax(probs))], probs

    def label_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DataError(f"scanner does not know label {label!r}") from None


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def _feature_matrix(texts: Sequence[str], vocab: dict[str, int]) -> sparse.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        counts: dict[int, float] = {}
        for word in token_texts(text):
            idx = vocab.get(word)
            if idx is not None:
                counts[idx] = counts.get(idx, 0.0) + 1.0
        for idx in sorted(counts):
            indices.append(idx)
            data.append(counts[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.intp), np.asarray(indptr, dtype=np.intp)),
        shape=(len(texts), len(vocab)),
    )


def train_learning_scanner(
    corpus: Sequence[Banner],
    granularity: str = "product",
    hyper: Optional[TrainConfig] = None,
    label_list: Optional[Sequence[Optional[str]]] = None,
) -> LearningScanner:
    """Fit the softmax classifier on banner token counts.

    Labels default to each banner's ground truth at ``granularity``;
    ``label_list`` overrides them (used for shadow training).  An 80/20
    split under the config seed yields ``holdout_accuracy``.
    """
    hyper = hyper or TrainConfig()
    if label_list is None:
        pairs = [
            (b.raw, b.labels.get(granularity))
            for b in corpus
            if b.labels is not None
        ]
    else:
        if len(label_list) != len(corpus):
            raise DataError("label_list must parallel the corpus")
        pairs = [(b.raw, y) for b, y in zip(corpus, label_list) if y]
    if not pairs:
        raise DataError("no labeled banners to train on")
    labels = sorted({y for _, y in pairs})
    if len(labels) < 2:
        raise DataError(f"need at least 2 labels to train, got {len(labels)}")
    label_idx = {y: i for i, y in enumerate(labels)}

    vocab: dict[str, int] = {}
    for text, _ in pairs:
        for word in token_texts(text):
            if word not in vocab:
                vocab[word] = len(vocab)

    rng = np.random.default_rng(hyper.seed)
    order = rng.permutation(len(pairs))
    n_hold = int(round(len(pairs) * hyper.holdout))
    hold_ids = order[:n_hold]
    train_ids = order[n_hold:] if n_hold < len(pairs) else order

    X = _feature_matrix([t for t, _ in pairs], vocab)
    y = np.asarray([label_idx[lab] for _, lab in pairs], dtype=np.intp)
    Xtr, ytr = X[train_ids], y[train_ids]

    n_labels, n_feat = len(labels), len(vocab)
    W = np.zeros((n_labels, n_feat))
    b = np.zeros(n_labels)
    onehot = np.zeros((Xtr.shape[0], n_labels))
    onehot[np.arange(Xtr.shape[0]), ytr] = 1.0
    for _ in range(hyper.epochs):
        logits = Xtr @ W.T + b
        logits -= logits.max(axis=1, keepdims=True)
        expl = np.exp(logits)
        probs = expl / expl.sum(axis=1, keepdims=True)
        delta = (probs - onehot) / Xtr.shape[0]
        W -= hyper.lr * (delta.T @ Xtr + hyper.l2 * W)
        b -= hyper.lr * delta.sum(axis=0)

    scanner = LearningScanner(
        labels=labels, granularity=granularity, vocab=vocab, weights=W, bias=b
    )
    if len(hold_ids):
        correct = sum(
            1 for i in hold_ids if scanner.predict(pairs[i][0])[0] == pairs[i][1]
        )
        scanner.holdout_accuracy = correct / len(hold_ids)
    return scanner


def save_scanner(scanner: LearningScanner, path) -> None:
    payload = {
        "format": SCANNER_FORMAT,
        "version": SCANNER_VERSION,
        "granularity": scanner.granularity,
        "labels": scanner.labels,
        "vocab": list(scanner.vocab),
        "weights": [[round(float(x), 12) for x in row] for row in scanner.weights],
        "bias": [round(float(x), 12) for x in scanner.bias],
        "holdout_accuracy": scanner.holdout_accuracy,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=True, sort_keys=True)


def load_scanner(path) -> LearningScanner:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != SCANNER_FORMAT:
        raise DataError(f"{path}: not a scanner checkpoint")
    if payload.get("version") != SCANNER_VERSION:
        raise DataError(f"{path}: unsupported scanner version")
    return LearningScanner(
        labels=list(payload["labels"]),
        granularity=payload["granularity"],
        vocab={w: i for i, w in enumerate(payload["vocab"])},
        weights=np.asarray(payload["weights"], dtype=np.float64),
        bias=np.asarray(payload["bias"], dtype=np.float64),
        holdout_accuracy=payload.get("holdout_accuracy"),
    )


# --- matching-based scanner --------------------------------------------------


@dataclass(frozen=True)
class Rule:
    pattern: str
    kind: str  # "regex" or "literal"
    label: str
    granularity: str

    def __post_init__(self) -> None:
        if self.kind not in RULESET_FORMAT_KINDS:
            raise DataError(f"rule kind must be one of {RULESET_FORMAT_KINDS}")
        if not self.label:
            raise DataError("rule label must be non-empty")
        if self.kind == "regex":
            try:
               re.compile(self.pattern)
            except re.error as exc:
                raise DataError(f"rule pattern {self.pattern!r} does not compile: {exc}") from exc


@dataclass
class MatchRuleset:
    rules: list[Rule]
    source: str = "synthetic"
    _compiled: list = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self._compiled = [
            re.compile(r.pattern) if r.kind == "regex" else r.pattern.lower()
            for r in self.rules
        ]

    def __len__(self) -> int:
        return len(self.rules)


def match_rule(ruleset: MatchRuleset, banner: str) -> Optional[tuple[int, Rule]]:
    """First rule (in list order) whose pattern matches, or None.

    Literal patterns are case-insensitive containment checks on the
    lowercased banner; regex patterns are searched as authored.
    """
    if not ruleset.rules:
        raise DataError("ruleset is empty")
    lowered = banner.lower()
    for i, (rule, compiled) in enumerate(zip(ruleset.rules, ruleset._compiled)):
        if rule.kind == "literal":
            if compiled in lowered:
                return i, rule
        else:
            if compiled.search(banner):
                return i, rule
    return None


def match(ruleset: MatchRuleset, banner: str) -> Optional[str]:
    hit = match_rule(ruleset, banner)
    return hit[1].label if hit else None


def save_ruleset(ruleset: MatchRuleset, path) -> None:
    payload = [
        {"pattern": r.pattern, "kind": r.kind, "label": r.label, "granularity": r.granularity}
        for r in ruleset.rules
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=True, indent=1)


def load_ruleset(path, source: Optional[str] = None) -> MatchRuleset:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, list):
        raise DataError(f"{path}: ruleset must be a JSON array")
    rules = [Rule(**{k: obj[k] for k in ("pattern", "kind", "label", "granularity")}) for obj in payload]
    return MatchRuleset(rules=rules, source=source or str(path))


# --- shadow model ------------------------------------------------------------


@dataclass
class ShadowModel:
    """A learning scanner trained to imitate a ruleset's labeling."""

    scanner: LearningScanner
    agreement: Optional[float] = None  # held-out agreement with the ruleset

    @property
    def labels(self) -> list[str]:
        return self.scanner.labels

    def predict(self, text: str) -> tuple[str, np.ndarray]:
        return self.scanner.predict(text)

    def confidence(self, text: str) -> np.ndarray:
        return self.scanner.confidence(text)

    def label_index(self, label: str) -> int:
        return self.scanner.label_index(label)


def train_shadow(
    ruleset: MatchRuleset,
    corpus: Sequence[Banner],
    hyper: Optional[TrainConfig] = None,
) -> ShadowModel:
    """Label the corpus with the ruleset, drop unmatched banners, and train a
    learning scanner on the induced labels.  Agreement is measured on the
    held-out matched banners."""
    hyper = hyper or TrainConfig()
    matched = [(b, match(ruleset, b.raw)) for b in corpus]
    kept = [(b, y) for b, y in matched if y is not None]
    if len({y for _, y in kept}) < 2:
        raise DataError("ruleset matches fewer than 2 distinct labels on this corpus")
    banners = [b for b, _ in kept]
    labels = [y for _, y in kept]
    scanner = train_learning_scanner(banners, granularity="mixed", hyper=hyper, label_list=labels)
    shadow = ShadowModel(scanner=scanner)

    rng = np.random.default_rng(hyper.seed)
    order = rng.permutation(len(kept))
    n_hold = int(round(len(kept) * hyper.holdout))
    hold_ids = order[:n_hold] if n_hold else order
    agree = sum(1 for i in hold_ids if scanner.predict(banners[i].raw)[0] == labels[i])
    shadow.agreement = agree / len(hold_ids) if len(hold_ids) else None
    return shadow
