"""The IoT semantic space: per-label ranked keyword lists.

For every device label, the space holds the words that carry that label's
identity, discovered by scoring each banner's words with the confidence-drop
importance measure, pooling the per-banner top words into the label bucket,
sorting the bucket by corpus term frequency, and keeping the top ``budget``
distinct words.  These are the plausible substitution candidates that keep a
perturbed banner looking like an IoT banner.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .core import Banner, DataError, token_texts
from .embedding import CooccurrenceEmbedding

log = logging.getLogger(__name__)

FORMAT_TAG = "bannercloak-semantic-space"


@dataclass
class SemanticSpace:
    entries: dict[str, list[str]]
    budget: int
    skipped: int = 0  # banners dropped for missing labels

    def labels(self) -> list[str]:
        return list(self.entries)

    def bucket(self, label: str) -> list[str]:
        if label not in self.entries:
            known = ", ".join(sorted(self.entries))
            raise DataError(f"unknown label {label!r}; known labels: {known}")
        return self.entries[label]

    def vocabulary(self) -> list[str]:
        seen: dict[str, None] = {}
        for words in self.entries.values():
            for w in words:
                seen.setdefault(w)
        return list(seen)


def build_semantic_space(
    corpus: Sequence[Banner],
    scorer,
    budget: int,
    granularity: str = "product",
    labels: Optional[Sequence[Optional[str]]] = None,
    rank_words: Optional[Callable[[Banner, str], list[str]]] = None,
) -> SemanticSpace:
    """Build the per-label keyword space from a labeled corpus.

    ``scorer`` must expose ``predict(text) -> (label, probs)`` and
    ``labels``; word ranking defaults to the importance-score ordering from
    the evasion module.  ``labels`` overrides the per-banner bucket label
    (used when bucketing by a ruleset's matched labels); otherwise the
    banner's ground-truth label at ``granularity`` is used.  Banners without
    a label are skipped and counted.
    """
    if budget < 1:
        raise ValueError("top-word budget must be >= 1")
    if not corpus:
        raise DataError("cannot build a semantic space from an empty corpus")
    if labels is not None and len(labels) != len(corpus):
        raise DataError("labels override must parallel the corpus")

    if rank_words is None:
        from .evasion import ranked_words  # deferred: evasion imports us too

        def rank_words(banner, label):
            return ranked_words(scorer, banner, label)

    pooled: dict[str, list[str]] = {}
    term_freq: dict[str, dict[str, int]] = {}
    skipped = 0
    for pos, banner in enumerate(corpus):
        if labels is not None:
            label = labels[pos]
        else:
            label = banner.labels.get(granularity) if banner.labels else None
        if not label:
            skipped += 1
            continue
        words = token_texts(banner.raw)
        freqs = term_freq.setdefault(label, {})
        for w in words:
            freqs[w] = freqs.get(w, 0) + 1
        top = rank_words(banner, label)[:budget]
        pooled.setdefault(label, []).extend(top)
    if skipped:
        log.warning("semantic space: skipped %d unlabeled banner(s)", skipped)
    if not pooled:
        raise DataError("no labeled banners to build the semantic space from")

    entries: dict[str, list[str]] = {}
    for label in pooled:
        freqs = term_freq[label]
        # Sort by descending term frequency, lexicographic tie-break, then
        # drop duplicates keeping the highest-TF occurrence.
        ordered = sorted(pooled[label], key=lambda w: (-freqs.get(w, 0), w))
        deduped: dict[str, None] = {}
        for w in ordered:
            deduped.setdefault(w)
        entries[label] = list(deduped)[:budget]
    return SemanticSpace(entries=entries, budget=budget, skipped=skipped)


def nearest_semantic(
    word: str,
    label: str,
    space: SemanticSpace,
    emb: CooccurrenceEmbedding,
    threshold: float,
    k: int,
) -> list[str]:
    """Up to ``k`` bucket words with cosine(word, candidate) >= threshold,
    most similar first (lexicographic tie-break); the word itself excluded.
    Empty when the word has no embedding vector."""
    if not -1.0 <= threshold <= 1.0:
        raise ValueError("cosine threshold must lie in [-1, 1]")
    bucket = space.bucket(label)
    if word not in emb:
        return []
    scored = []
    for cand in bucket:
        if cand == word or cand not in emb:
            continue
        sim = emb.cosine(word, cand)
        if sim >= threshold:
            scored.append((-sim, cand))
    scored.sort()
    return [cand for _, cand in scored[:k]]


def save_semantic_space(space: SemanticSpace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space.entries, fh, ensure_ascii=True, sort_keys=True)


def load_semantic_space(path, budget: Optional[int] = None) -> SemanticSpace:
    with open(path, "r", encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, dict):
        raise DataError(f"{path}: semantic space must be a JSON object")
    if budget is None:
        budget = max((len(v) for v in entries.values()), default=1) or 1
    return SemanticSpace(entries={k: list(v) for k, v in entries.items()}, budget=budget)
