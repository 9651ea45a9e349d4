"""Region-aware candidate generation: which rewrites of a token are legal.

* IMR tokens get nothing -- editing markup breaks the page.
* FR tokens get only visual candidates (appearance must survive).
* NFR tokens get semantic candidates from the label's keyword bucket plus,
  by default, the visual candidates as well (a strict superset that never
  hurts: visual edits are invisible everywhere).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import IMR, NFR, Token
from .embedding import CooccurrenceEmbedding
from .semantic import SemanticSpace, nearest_semantic
from .visual import VisualSpace, visual_variants

SEMANTIC = "semantic"
HOMOGLYPH = "homoglyph"
ZERO_WIDTH = "zero_width"
BIDI = "bidi"


@dataclass(frozen=True)
class Candidate:
    kind: str  # semantic | homoglyph | zero_width | bidi
    text: str


def candidate_set(
    token: Token,
    surface: str,
    label: str,
    sem_space: SemanticSpace,
    vis_space: VisualSpace,
    emb: CooccurrenceEmbedding,
    cos_threshold: float = 0.0,
    k: Optional[int] = None,
    visual_in_nfr: bool = True,
) -> list[Candidate]:
    """All legal perturbed versions of one token, deterministic order.

    ``surface`` is the original-case substring the token covers; visual
    candidates are built from it so case survives on screen.  Semantic
    candidates come from the label bucket ranked by embedding similarity.
    Every candidate differs from the token's text.
    """
    if token.region == IMR:
        return []
    out: list[Candidate] = []
    if token.region == NFR:
        limit = k if k is not None else len(sem_space.bucket(label))
        for word in nearest_semantic(token.text, label, sem_space, emb, cos_threshold, limit):
            out.append(Candidate(SEMANTIC, word))
    if token.region != NFR or visual_in_nfr:
        for kind, variant in visual_variants(surface, vis_space):
            out.append(Candidate(kind, variant))
    return [c for c in out if c.text.lower() != token.text]
