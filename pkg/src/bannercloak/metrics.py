"""Similarity primitives, attack-quality metrics, and the adversary-filter
simulation.

The four headline metrics: SR (fraction of attacks that fooled the
scanner), MR (mean Jaccard distance between original and adversarial token
sets, over successes), QN (mean scorer queries per success), and VC (the
fraction of successes whose focus-region edits survive the visual
normalization oracle).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import FR, DataError, token_char_spans, token_texts
from .visual import (
    VisualSpace,
    default_visual_space,
    fold_homoglyphs,
    normalize_visual,
    strip_perturbation_controls,
    unreverse_bidi_spans,
)


def jaccard(a: Iterable, b: Iterable) -> float:
    """|A n B| / |A u B| with jaccard(empty, empty) = 1."""
    sa, sb = set(a), set(b)
    union = len(sa | sb)
    if union == 0:
        return 1.0
    return len(sa & sb) / union


def banner_jaccard(original: str, adversarial: str) -> float:
    """Jaccard similarity of the two banners' unique token sets."""
    return jaccard(token_texts(original), token_texts(adversarial))


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for a zero vector")
    return float(np.dot(u, v) / (nu * nv))


def edit_distance(s: str, t: str) -> int:
    """Levenshtein distance over Unicode scalar values, unit costs."""
    if s == t:
        return 0
    if len(s) < len(t):
        s, t = t, s
    previous = list(range(len(t) + 1))
    for i, cs in enumerate(s, 1):
        current = [i]
        for j, ct in enumerate(t, 1):
            current.append(
                min(
                    previous[j] + 1,  # deletion
                    current[j - 1] + 1,  # insertion
                    previous[j - 1] + (cs != ct),  # substitution
                )
            )
        previous = current
    return previous[-1]


def visual_consistency_check(
    original: str,
    adversarial: str,
    edits: Sequence,
    vis_space: Optional[VisualSpace] = None,
) -> bool:
    """Automated stand-in for eyeballing rendered banners.

    Passes iff every focus-region edit is a pure visual operation whose
    output normalizes back to the original surface form; non-focus and
    immutable-region edits are exempt.  Raises when the edit trace does not
    reproduce the adversarial banner.
    """
    vis_space = vis_space or default_visual_space()
    spans = token_char_spans(original)
    rebuilt = original
    for e in sorted(edits, key=lambda e: e.index, reverse=True):
        if e.index >= len(spans):
            raise DataError(f"edit index {e.index} outside banner with {len(spans)} tokens")
        _, c0, c1 = spans[e.index]
        rebuilt = rebuilt[:c0] + e.after + rebuilt[c1:]
    if rebuilt != adversarial:
        raise DataError("edit trace does not reproduce the adversarial banner")

    for e in edits:
        if e.region != FR:
            continue
        if e.kind == "semantic":
            return False
        if normalize_visual(e.after, vis_space) != fold_homoglyphs(e.before, vis_space):
            return False
    return True


def attacker_filter(banner: str, vis_space: Optional[VisualSpace] = None) -> str:
    """Simulate an adversary scrubbing our obfuscation: un-reverse wrapped
    spans, strip the perturbation code points, fold homoglyphs back to
    Latin.  Idempotent; semantic substitutions survive it."""
    text = unreverse_bidi_spans(banner)
    text = strip_perturbation_controls(text)
    return fold_homoglyphs(text, vis_space or default_visual_space())


@dataclass
class EvalSummary:
    sr: float
    mr_mean: float
    qn_mean: float
    vc_pass: float
    n: int
    granularity: str
    filtered: bool = False
    acc_clean: Optional[float] = None
    acc_adversarial: Optional[float] = None
    acc_filtered: Optional[float] = None

    def to_json(self) -> dict:
        out = {
            "sr": round(self.sr, 9),
            "mr_mean": round(self.mr_mean, 9),
            "qn_mean": round(self.qn_mean, 9),
            "vc_pass": round(self.vc_pass, 9),
            "n": self.n,
            "granularity": self.granularity,
            "filtered": self.filtered,
        }
        if self.filtered:
            out["acc_clean"] = round(self.acc_clean, 9)
            out["acc_adversarial"] = round(self.acc_adversarial, 9)
            out["acc_filtered"] = round(self.acc_filtered, 9)
        return out


def evaluate(
    results: Sequence,
    scanner=None,
    filtered: bool = False,
    truth: Optional[dict] = None,
    granularity: Optional[str] = None,
    vis_space: Optional[VisualSpace] = None,
) -> EvalSummary:
    """Aggregate attack results into the four metrics.

    MR/QN/VC are averaged over successes.  With ``filtered`` set (requires
    ``scanner``), each adversarial banner is also re-scored before and after
    the adversary filter, yielding the before/after accuracy pair; reference
    labels come from ``truth`` (banner id -> label) or, failing that, each
    result's original label.
    """
    results = list(results)
    if not results:
        raise DataError("cannot evaluate an empty result list")
    vis_space = vis_space or default_visual_space()
    successes = [r for r in results if r.success]
    sr = len(successes) / len(results)
    mr_mean = float(np.mean([1.0 - r.jaccard for r in successes])) if successes else 0.0
    qn_mean = float(np.mean([r.queries for r in successes])) if successes else 0.0
    vc_hits = sum(
        1
        for r in successes
        if visual_consistency_check(r.original, r.adversarial, r.edits, vis_space)
    )
    vc_pass = vc_hits / len(successes) if successes else 1.0

    if granularity is None:
        granularity = getattr(scanner, "granularity", None) or "unknown"
    summary = EvalSummary(
        sr=sr, mr_mean=mr_mean, qn_mean=qn_mean, vc_pass=vc_pass,
        n=len(results), granularity=granularity,
    )
    if filtered:
        if scanner is None:
            raise DataError("filtered evaluation needs a scanner")
        reference = {
            r.banner_id: (truth or {}).get(r.banner_id, r.original_label) for r in results
        }
        clean = adv = filt = 0
        for r in results:
            ref = reference[r.banner_id]
            clean += scanner.predict(r.original)[0] == ref
            adv += scanner.predict(r.adversarial)[0] == ref
            filt += scanner.predict(attacker_filter(r.adversarial, vis_space))[0] == ref
        summary.filtered = True
        summary.acc_clean = clean / len(results)
        summary.acc_adversarial = adv / len(results)
        summary.acc_filtered = filt / len(results)
    return summary


def format_summary_table(rows: Sequence[tuple[str, EvalSummary]]) -> str:
    """Plain-text table of one or more evaluation summaries."""
    header = f"{'setting':<24} {'SR':>8} {'MR':>8} {'QN':>10} {'VC':>8} {'n':>6}"
    lines = [header, "-" * len(header)]
    for name, s in rows:
        lines.append(
            f"{name:<24} {s.sr:>7.2%} {s.mr_mean:>8.3f} {s.qn_mean:>10.2f} "
            f"{s.vc_pass:>7.2%} {s.n:>6d}"
        )
    return "\n".join(lines)
