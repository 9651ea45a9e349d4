"""Black-box attacks against the two scanner families.

``attack_learning`` drives a score-guided population search: rank token
positions by how much deleting each one drops the target-label confidence,
build per-position candidate pools from the two perturbation spaces, then
iterate selection and mutation until the scanner's label flips while the
token-set Jaccard similarity stays above the floor.

``attack_matching`` cannot query the ruleset for scores, so it walks the
banner guided by a shadow model: every token that belongs to the predicted
label's keyword bucket is rewritten with a near-synonym from outside the
bucket (or an invisible Unicode variant where appearance must survive),
until the shadow's label flips.  Success is then judged against the real
ruleset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .candidates import SEMANTIC, Candidate, candidate_set
from .core import (
    IMR,
    NFR,
    Banner,
    DataError,
    Token,
    TokenizedBanner,
    partition_regions,
    preprocess,
    token_char_spans,
    token_texts,
)
from .embedding import CooccurrenceEmbedding
from .metrics import jaccard
from .scanners import MatchRuleset, ShadowModel, match, match_rule
from .semantic import SemanticSpace
from .visual import VisualSpace, default_visual_space, visual_variants


@dataclass
class AttackParams:
    """Knobs of the learning-scanner attack.

    ``a`` and ``b`` steer the mutation schedule and must satisfy
    0 < b < a < 1 with a + b = 1; ``theta`` is the minimum token-set Jaccard
    similarity an adversarial banner must keep; ``query_budget`` of 0 means
    unlimited.
    """

    max_iterations: int = 20  # T
    top_k: int = 20  # K
    per_slot: int = 8  # P
    theta: float = 0.85
    a: float = 0.8
    b: float = 0.2
    seed: int = 0
    query_budget: int = 0
    cos_threshold: float = 0.0
    visual_in_nfr: bool = True

    def __post_init__(self) -> None:
        if min(self.max_iterations, self.top_k, self.per_slot) < 1:
            raise ValueError("T, K, and P must all be >= 1")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if not (0.0 < self.b < self.a < 1.0):
            raise ValueError("mutation constants must satisfy 0 < b < a < 1")
        if abs(self.a + self.b - 1.0) > 1e-9:
            raise ValueError("mutation constants must satisfy a + b = 1")
        if self.query_budget < 0:
            raise ValueError("query budget must be >= 0 (0 = unlimited)")


@dataclass(frozen=True)
class Edit:
    index: int
    region: str
    kind: str
    before: str
    after: str


@dataclass
class AttackResult:
    banner_id: str
    success: bool
    reason: str  # "" on success; "exhausted" / "budget" / "no-candidates" / ...
    original: str
    adversarial: str
    original_label: Optional[str]
    predicted_label: Optional[str]
    queries: int
    jaccard: float
    edits: list[Edit] = field(default_factory=list)
    iterations_used: int = 0

    def to_json(self) -> dict:
        return {
            "banner_id": self.banner_id,
            "success": self.success,
            "reason": self.reason,
            "original": self.original,
            "adversarial": self.adversarial,
            "original_label": self.original_label,
            "predicted_label": self.predicted_label,
            "queries": self.queries,
            "jaccard": self.jaccard,
            "iterations_used": self.iterations_used,
            "edits": [
                {
                    "index": e.index,
                    "region": e.region,
                    "kind": e.kind,
                    "before": e.before,
                    "after": e.after,
                    "codepoints": _spell_codepoints(e.after),
                }
                for e in self.edits
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AttackResult":
        return cls(
            banner_id=obj["banner_id"],
            success=obj["success"],
            reason=obj.get("reason", ""),
            original=obj["original"],
            adversarial=obj["adversarial"],
            original_label=obj.get("original_label"),
            predicted_label=obj.get("predicted_label"),
            queries=obj["queries"],
            jaccard=obj["jaccard"],
            edits=[
                Edit(e["index"], e["region"], e["kind"], e["before"], e["after"])
                for e in obj.get("edits", [])
            ],
            iterations_used=obj.get("iterations_used", 0),
        )


def _spell_codepoints(text: str) -> str:
    """Diff-friendly rendering: non-ASCII characters become U+XXXX tags."""
    return "".join(ch if 0x20 <= ord(ch) < 0x7F else f"[U+{ord(ch):04X}]" for ch in text)


def save_results(results: Sequence[AttackResult], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), ensure_ascii=True, sort_keys=True))
            fh.write("\n")


def load_results(path) -> list[AttackResult]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(AttackResult.from_json(json.loads(line)))
    return out


class QueryBudgetExceeded(RuntimeError):
    pass


class QueryCounter:
    """Counts scorer invocations; raises once a nonzero budget is spent."""

    def __init__(self, scorer, budget: int = 0):
        self._scorer = scorer
        self.budget = budget
        self.count = 0

    @property
    def labels(self):
        return self._scorer.labels

    def predict(self, text: str):
        if self.budget and self.count >= self.budget:
            raise QueryBudgetExceeded(f"query budget of {self.budget} spent")
        self.count += 1
        return self._scorer.predict(text)


def _label_index(scorer, label: str) -> int:
    labels = list(scorer.labels)
    try:
        return labels.index(label)
    except ValueError:
        raise DataError(f"scorer does not know label {label!r}") from None


def importance_scores(
    scorer,
    tokenized: TokenizedBanner,
    label: str,
    base_probs: Optional[np.ndarray] = None,
) -> list[tuple[Token, float]]:
    """Confidence drop caused by deleting each non-IMR token.

    S(w_i) = F_y(x) - F_y(x without w_i); returned sorted by descending
    score with lexicographic tie-break.  Costs exactly 1 + (scored tokens)
    scorer queries, or just (scored tokens) when ``base_probs`` is supplied.
    """
    idx = _label_index(scorer, label)
    if base_probs is None:
        _, base_probs = scorer.predict(tokenized.text)
    base = float(base_probs[idx])
    text = tokenized.text
    scored = []
    for tok in tokenized.tokens:
        if tok.region == IMR:
            continue
        c0, c1 = tok.cspan
        _, p = scorer.predict(text[:c0] + text[c1:])
        scored.append((tok, base - float(p[idx])))
    scored.sort(key=lambda pair: (-pair[1], pair[0].text, pair[0].index))
    return scored


def ranked_words(scorer, banner: Banner, label: str) -> list[str]:
    """Distinct words of a banner in descending importance order."""
    clean = preprocess(banner.raw, banner.protocol)
    tb = partition_regions(Banner(banner.id, banner.protocol, clean, banner.labels))
    seen: dict[str, None] = {}
    for tok, _ in importance_scores(scorer, tb, label):
        seen.setdefault(tok.text)
    return list(seen)


def mutation_probabilities(
    t: int, total: int, a: float = 0.8, b: float = 0.2
) -> tuple[float, float]:
    """Linear hand-over from local refinement (P_L) to following the global
    best (P_G) as iterations progress; P_L + P_G = 1 always."""
    if total < 1:
        raise ValueError("total iteration count must be >= 1")
    if not 0 <= t <= total:
        raise ValueError(f"iteration {t} outside [0, {total}]")
    frac = t / total
    p_local = (1.0 - frac) * a + frac * b
    p_global = frac * a + (1.0 - frac) * b
    return p_local, p_global


def random_factor(delta: float) -> float:
    """Probability of perturbing one extra token outside the top-K set,
    decaying from 1 at zero change rate to 0 at a 50% change rate."""
    if delta < 0:
        raise ValueError("change rate must be >= 0")
    return max(0.0, 1.0 - 2.0 * delta)


def select_optimal(
    slots: Sequence[Sequence[str]],
    scorer,
    original: str,
    label: str,
    carry: Optional[Sequence[Optional[tuple[float, str]]]] = None,
    base_confidence: Optional[float] = None,
) -> tuple[list[Optional[tuple[float, str]]], tuple[float, str]]:
    """Score a population grouped into slots and keep per-slot and global
    bests.

    Each candidate's score is F_y(original) - F_y(candidate).  A slot's best
    is the max of its new scores and its carried best from the previous
    iteration; the global best breaks ties by lowest slot index, then
    lexicographic text.
    """
    idx = _label_index(scorer, label)
    if base_confidence is None:
        _, probs = scorer.predict(original)
        base_confidence = float(probs[idx])
    bests: list[Optional[tuple[float, str]]] = []
    for slot in slots:
        entries: list[tuple[float, str]] = []
        if carry is not None and carry[len(bests)] is not None:
            entries.append(tuple(carry[len(bests)]))
        for text in slot:
            _, probs = scorer.predict(text)
            entries.append((base_confidence - float(probs[idx]), text))
        bests.append(min(entries, key=lambda e: (-e[0], e[1])) if entries else None)
    ranked = [(-b[0], k, b[1]) for k, b in enumerate(bests) if b is not None]
    if not ranked:
        raise DataError("population is empty")
    _, k, text = min(ranked)
    return bests, (bests[k][0], text)


# --- learning-scanner attack -------------------------------------------------


@dataclass
class _Member:
    """One population member: its edits (token index -> candidate) and the
    banner text they produce."""

    edits: dict[int, Candidate]
    text: str


class _Scored:
    """Memoized candidate scoring through the query counter."""

    def __init__(self, counter: QueryCounter, label_idx: int, base_conf: float):
        self.counter = counter
        self.label_idx = label_idx
        self.base_conf = base_conf
        self.cache: dict[str, tuple[float, str]] = {}

    def __call__(self, text: str) -> tuple[float, str]:
        hit = self.cache.get(text)
        if hit is None:
            label, probs = self.counter.predict(text)
            hit = (self.base_conf - float(probs[self.label_idx]), label)
            self.cache[text] = hit
        return hit


def attack_learning(
    scorer,
    banner: Banner,
    sem_space: SemanticSpace,
    emb: CooccurrenceEmbedding,
    params: Optional[AttackParams] = None,
    vis_space: Optional[VisualSpace] = None,
) -> AttackResult:
    """Generate an adversarial banner against a confidence-scoring scanner.

    Deterministic for fixed inputs and seed.  The returned edit trace maps
    token indices of the preprocessed banner to replacement strings;
    re-applying it reproduces the adversarial text byte-exactly.
    """
    params = params or AttackParams()
    vis_space = vis_space or default_visual_space()
    rng = np.random.default_rng(params.seed)
    counter = QueryCounter(scorer, params.query_budget)

    clean = preprocess(banner.raw, banner.protocol)
    tb = partition_regions(Banner(banner.id, banner.protocol, clean, banner.labels))
    orig_token_set = set(tb.texts())

    def build_result(success, reason, adversarial, label, edits, iterations, y_label):
        return AttackResult(
            banner_id=banner.id,
            success=success,
            reason=reason,
            original=clean,
            adversarial=adversarial,
            original_label=y_label,
            predicted_label=label,
            queries=counter.count,
            jaccard=jaccard(orig_token_set, set(token_texts(adversarial))),
            edits=_edit_trace(tb, edits),
            iterations_used=iterations,
        )

    y_label = None
    try:
        y_label, base_probs = counter.predict(clean)
        label_idx = _label_index(scorer, y_label)
        scored = _Scored(counter, label_idx, float(base_probs[label_idx]))
        scored.cache[clean] = (0.0, y_label)

        non_imr = [t for t in tb.tokens if t.region != IMR]
        if not non_imr:
            return build_result(False, "all-imr", clean, y_label, {}, 0, y_label)

        ranking = importance_scores(counter, tb, y_label, base_probs=base_probs)
        slot_tokens = [tok for tok, _ in ranking[: params.top_k]]

        def candidates_for(tok: Token) -> list[Candidate]:
            return candidate_set(
                tok,
                tb.surface(tok.index),
                y_label,
                sem_space,
                vis_space,
                emb,
                cos_threshold=params.cos_threshold,
                visual_in_nfr=params.visual_in_nfr,
            )

        full_cands: dict[int, list[Candidate]] = {
            tok.index: candidates_for(tok) for tok in slot_tokens
        }
        slots = [tok for tok in slot_tokens if full_cands[tok.index]]
        if not slots:
            return build_result(False, "no-candidates", clean, y_label, {}, 0, y_label)
        top_k_indices = {tok.index for tok in slot_tokens}

        def make_member(edits: dict[int, Candidate]) -> _Member:
            return _Member(edits, tb.apply({i: c.text for i, c in edits.items()}))

        # Initial population: up to P candidates per slot, drawn without
        # replacement in seeded order.
        population: list[list[_Member]] = []
        for tok in slots:
            cands = full_cands[tok.index]
            order = rng.permutation(len(cands))[: params.per_slot]
            population.append([make_member({tok.index: cands[int(i)]}) for i in order])

        slot_bests: list[Optional[tuple[float, _Member]]] = [None] * len(slots)
        g_member: Optional[_Member] = None

        for t in range(1, params.max_iterations + 1):
            # Selection: per-slot best of the new scores and the carried best.
            for k, pop in enumerate(population):
                entries: list[tuple[float, str, _Member]] = []
                if slot_bests[k] is not None:
                    score, member = slot_bests[k]
                    entries.append((score, member.text, member))
                for m in pop:
                    entries.append((scored(m.text)[0], m.text, m))
                if entries:
                    best = min(entries, key=lambda e: (-e[0], e[1]))
                    slot_bests[k] = (best[0], best[2])
            ranked = [
                (-sb[0], k, sb[1].text) for k, sb in enumerate(slot_bests) if sb is not None
            ]
            if not ranked:
                return build_result(False, "no-candidates", clean, y_label, {}, t, y_label)
            _, g_slot, g_text = min(ranked)
            g_member = slot_bests[g_slot][1]
            g_label = scored(g_text)[1]

            if g_label != y_label and (
                jaccard(orig_token_set, set(token_texts(g_text))) >= params.theta
            ):
                return build_result(True, "", g_text, g_label, g_member.edits, t, y_label)

            if t == params.max_iterations:
                break

            # Mutation: refine the slot best locally with probability P_L,
            # otherwise branch off the global best; optionally hit one more
            # untouched token outside the top-K set.
            p_local, _ = mutation_probabilities(t, params.max_iterations, params.a, params.b)
            next_population: list[list[_Member]] = []
            for k, tok in enumerate(slots):
                fresh: list[_Member] = []
                local_base = slot_bests[k][1] if slot_bests[k] is not None else g_member
                for _ in range(params.per_slot):
                    if rng.random() < p_local:
                        edits = dict(local_base.edits)
                        edited = sorted(edits)
                        target = edited[int(rng.integers(len(edited)))]
                        options = full_cands[target]  # every edit came from here
                        edits[target] = options[int(rng.integers(len(options)))]
                    else:
                        edits = dict(g_member.edits)
                        options = full_cands[tok.index]
                        edits[tok.index] = options[int(rng.integers(len(options)))]
                    delta = len(edits) / max(1, len(tb.tokens))
                    if rng.random() < random_factor(delta):
                        pool = [
                            tk
                            for tk in non_imr
                            if tk.index not in edits and tk.index not in top_k_indices
                        ]
                        if pool:
                            extra = pool[int(rng.integers(len(pool)))]
                            if extra.index not in full_cands:
                                full_cands[extra.index] = candidates_for(extra)
                            opts = full_cands[extra.index]
                            if opts:
                                edits[extra.index] = opts[int(rng.integers(len(opts)))]
                    fresh.append(make_member(edits))
                next_population.append(fresh)
            population = next_population

        # Exhausted: report the best-effort global candidate.
        g_text = g_member.text
        return build_result(
            False,
            "exhausted",
            g_text,
            scored(g_text)[1],
            g_member.edits,
            params.max_iterations,
            y_label,
        )
    except QueryBudgetExceeded:
        return build_result(False, "budget", clean, None, {}, 0, y_label)


def _edit_trace(tb: TokenizedBanner, edits: dict[int, Candidate]) -> list[Edit]:
    return [
        Edit(
            index=i,
            region=tb.tokens[i].region,
            kind=edits[i].kind,
            before=tb.surface(i),
            after=edits[i].text,
        )
        for i in sorted(edits)
    ]


def apply_edit_trace(original: str, edits: Sequence[Edit]) -> str:
    """Re-apply a result's edit trace to the original banner text."""
    spans = token_char_spans(original)
    text = original
    for e in sorted(edits, key=lambda e: e.index, reverse=True):
        if e.index >= len(spans):
            raise DataError(f"edit index {e.index} outside banner with {len(spans)} tokens")
        _, c0, c1 = spans[e.index]
        if original[c0:c1] != e.before:
            raise DataError(
                f"edit at token {e.index} expected {e.before!r}, found {original[c0:c1]!r}"
            )
        text = text[:c0] + e.after + text[c1:]
    return text


# --- matching-scanner attack --------------------------------------------------


def _matching_candidates(
    token: Token,
    surface: str,
    pool: list[str],
    emb: CooccurrenceEmbedding,
    threshold: float,
    vis_space: VisualSpace,
) -> list[Candidate]:
    """Best-first substitutions for one scanned token: near-synonyms from
    outside the label bucket where words may change (NFR), invisible Unicode
    variants where appearance must survive (FR)."""
    out: list[Candidate] = []
    if token.region == NFR and token.text in emb:
        scored = []
        for word in pool:
            if word == token.text or word not in emb:
                continue
            sim = emb.cosine(token.text, word)
            if sim >= threshold:
                scored.append((-sim, word))
        scored.sort()
        out.extend(Candidate(SEMANTIC, w) for _, w in scored)
    out.extend(Candidate(kind, text) for kind, text in visual_variants(surface, vis_space))
    return out


def attack_matching(
    ruleset: MatchRuleset,
    shadow: ShadowModel,
    banner: Banner,
    sem_space: SemanticSpace,
    emb: CooccurrenceEmbedding,
    threshold: float = 0.8,
    vis_space: Optional[VisualSpace] = None,
) -> AttackResult:
    """Generate an adversarial banner against a pattern-matching scanner.

    The ruleset is never queried during the search; the query count covers
    shadow-model invocations only.  Success means the real ruleset's verdict
    on the adversarial banner differs from its verdict on the original.
    """
    vis_space = vis_space or default_visual_space()
    counter = QueryCounter(shadow)

    clean = preprocess(banner.raw, banner.protocol)
    tb = partition_regions(Banner(banner.id, banner.protocol, clean, banner.labels))
    orig_token_set = set(tb.texts())
    orig_match = match(ruleset, clean)

    def build_result(success, reason, adversarial, edits):
        return AttackResult(
            banner_id=banner.id,
            success=success,
            reason=reason,
            original=clean,
            adversarial=adversarial,
            original_label=orig_match,
            predicted_label=match(ruleset, adversarial),
            queries=counter.count,
            jaccard=jaccard(orig_token_set, set(token_texts(adversarial))),
            edits=_edit_trace(tb, edits),
            iterations_used=0,
        )

    if orig_match is None:
        return build_result(False, "unmatched", clean, {})

    y_label, _ = counter.predict(clean)
    bucket = set(sem_space.bucket(y_label))
    pool = [w for w in sem_space.vocabulary() if w not in bucket]

    edits: dict[int, Candidate] = {}
    used_words: set[str] = set()  # each injected word at most once per banner
    current = clean
    shadow_label = y_label
    for tok in tb.tokens:
        if shadow_label != y_label:
            break  # the shadow flipped; stop perturbing
        if tok.region == IMR or tok.text not in bucket:
            continue
        for cand in _matching_candidates(
            tok, tb.surface(tok.index), pool, emb, threshold, vis_space
        ):
            if cand.text in bucket:
                continue
            if cand.kind == SEMANTIC and cand.text in used_words:
                continue
            if cand.kind == SEMANTIC:
                used_words.add(cand.text)
            edits[tok.index] = cand
            current = tb.apply({i: c.text for i, c in edits.items()})
            shadow_label, _ = counter.predict(current)
            break

    if not edits:
        return build_result(False, "no-overlap", clean, {})
    success = match(ruleset, current) != orig_match
    return build_result(success, "" if success else "match-unchanged", current, edits)


def original_rule_still_matches(ruleset: MatchRuleset, result: AttackResult) -> Optional[bool]:
    """Whether the rule that originally fired still matches the adversarial
    banner (None when nothing matched originally)."""
    hit = match_rule(ruleset, result.original)
    if hit is None:
        return None
    _, rule = hit
    single = MatchRuleset(rules=[rule], source=ruleset.source)
    return match_rule(single, result.adversarial) is not None
