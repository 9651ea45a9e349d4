"""The visual similarity space: Unicode edits that survive rendering.

Three operations perturb a word without changing what a user sees:

1. homoglyph substitution -- swap one character for a Greek/Cyrillic
   lookalike (table-driven, shipped as package data);
2. zero-width space insertion -- U+200B splits one word into two tokens
   while rendering as nothing;
3. bidi reversal -- store the characters reversed and wrap them in
   directional controls so a bidi-aware renderer displays them in the
   original order.

``normalize_visual`` is the inverse oracle used both by the visual
consistency check and by the simulated adversary filter: it must map any
output of the three operations back to the canonical form of the input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .core import BACKSPACE, BIDI_CONTROLS, ZERO_WIDTH_SPACE, DataError

# Wrap order for reversed words: the periphery sequence renders the reversed
# character run left-to-right again and isolates it from surrounding text.
BIDI_PREFIX = "‭⁦‮"  # LRO, LRI, RLO
BIDI_SUFFIX = "⁩‬"  # PDI, PDF

STRIPPABLE = frozenset(BIDI_CONTROLS + ZERO_WIDTH_SPACE + BACKSPACE)


@dataclass
class VisualSpace:
    """Homoglyph table plus the zero-width / bidi-wrap constants."""

    homoglyphs: dict[str, list[str]]
    zero_width: str = ZERO_WIDTH_SPACE
    bidi_prefix: str = BIDI_PREFIX
    bidi_suffix: str = BIDI_SUFFIX
    scripts: dict[str, str] = field(default_factory=dict)

    @property
    def fold_map(self) -> dict[str, str]:
        """Confusable code point -> canonical Latin character."""
        if not hasattr(self, "_fold_map"):
            folds: dict[str, str] = {}
            for src, targets in self.homoglyphs.items():
                for tgt in targets:
                    folds[tgt] = src
            object.__setattr__(self, "_fold_map", folds)
        return self._fold_map


def _parse_codepoint(spec: str) -> str:
    if not spec.startswith("U+"):
        raise DataError(f"bad code point spec {spec!r}")
    return chr(int(spec[2:], 16))


def load_homoglyph_table(path=None) -> VisualSpace:
    """Load the homoglyph TSV (source\\ttarget\\tscript); defaults to the
    table shipped with the package."""
    if path is None:
        text = resources.files("bannercloak").joinpath("data/homoglyphs.tsv").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    homoglyphs: dict[str, list[str]] = {}
    scripts: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"homoglyph table line {lineno}: expected 3 columns")
        src, tgt, script = parts
        s, t = _parse_codepoint(src), _parse_codepoint(tgt)
        if s == t:
            raise DataError(f"homoglyph table line {lineno}: source equals target")
        homoglyphs.setdefault(s, []).append(t)
        scripts[t] = script
    return VisualSpace(homoglyphs=homoglyphs, scripts=scripts)


_DEFAULT_SPACE: Optional[VisualSpace] = None


def default_visual_space() -> VisualSpace:
    global _DEFAULT_SPACE
    if _DEFAULT_SPACE is None:
        _DEFAULT_SPACE = load_homoglyph_table()
    return _DEFAULT_SPACE


def homoglyph_substitute(
    word: str, position: int, rng: np.random.Generator, space: Optional[VisualSpace] = None
) -> Optional[str]:
    """Replace the character at ``position`` with a table homoglyph chosen
    uniformly by ``rng``.  Returns None when the character has no entry
    (the caller tries another position)."""
    if not 0 <= position < len(word):
        raise ValueError(f"position {position} outside word of length {len(word)}")
    space = space or default_visual_space()
    targets = space.homoglyphs.get(word[position])
    if not targets:
        return None
    pick = targets[int(rng.integers(len(targets)))]
    return word[:position] + pick + word[position + 1 :]


def insert_zero_width(word: str, position: int) -> str:
    """Insert U+200B at a strictly intra-word position, splitting the word
    into two tokens whose concatenation renders identically."""
    if not 0 < position < len(word):
        raise ValueError("zero-width insertion must be strictly intra-word")
    return word[:position] + ZERO_WIDTH_SPACE + word[position:]


def bidi_reverse(word: str) -> str:
    """Store ``word`` reversed inside a control wrap that renders it forward.

    ``unwrap_bidi(bidi_reverse(w)) == w`` for any control-free word.
    """
    if not word:
        raise ValueError("cannot reverse an empty word")
    if any(ch in BIDI_CONTROLS for ch in word):
        raise ValueError("word already contains bidi controls")
    return BIDI_PREFIX + word[::-1] + BIDI_SUFFIX


def unwrap_bidi(wrapped: str) -> str:
    """Inverse of :func:`bidi_reverse` for a single wrapped word."""
    if not (wrapped.startswith(BIDI_PREFIX) and wrapped.endswith(BIDI_SUFFIX)):
        raise ValueError("not a bidi-wrapped word")
    inner = wrapped[len(BIDI_PREFIX) : len(wrapped) - len(BIDI_SUFFIX)]
    return inner[::-1]


_WRAPPED_RE = re.compile(
    re.escape(BIDI_PREFIX) + "([^" + re.escape(BIDI_CONTROLS) + "]*)" + re.escape(BIDI_SUFFIX)
)


def unreverse_bidi_spans(text: str) -> str:
    """Un-reverse every bidi-wrapped span anywhere in ``text``."""
    return _WRAPPED_RE.sub(lambda m: m.group(1)[::-1], text)


def strip_perturbation_controls(text: str) -> str:
    """Drop zero-width spaces, bidi controls, and backspaces."""
    return "".join(ch for ch in text if ch not in STRIPPABLE)


def fold_homoglyphs(text: str, space: Optional[VisualSpace] = None) -> str:
    """Map confusable characters back to canonical Latin."""
    folds = (space or default_visual_space()).fold_map
    return "".join(folds.get(ch, ch) for ch in text)


def normalize_visual(text: str, space: Optional[VisualSpace] = None) -> str:
    """Undo every visual operation: un-reverse wrapped spans, strip the
    perturbation code points, fold homoglyphs.  For any visual op ``v`` and
    clean word ``w``: ``normalize_visual(v(w)) == fold_homoglyphs(w)``."""
    text = unreverse_bidi_spans(text)
    text = strip_perturbation_controls(text)
    return fold_homoglyphs(text, space)


def visual_variants(surface: str, space: Optional[VisualSpace] = None) -> list[tuple[str, str]]:
    """Enumerate every single visual perturbation of ``surface``.

    Returns (kind, variant) pairs in deterministic order: all homoglyph
    single-substitutions, zero-width insertions at each interior position
    splitting two word characters, then the bidi reversal.
    """
    space = space or default_visual_space()
    out: list[tuple[str, str]] = []
    for pos, ch in enumerate(surface):
        for tgt in space.homoglyphs.get(ch, ()):
            out.append(("homoglyph", surface[:pos] + tgt + surface[pos + 1 :]))
    for pos in range(1, len(surface)):
        # Splitting next to intra-word punctuation would strand it at a token
        # edge, so only split between two letters/digits.
        if _is_wordchar(surface[pos - 1]) and _is_wordchar(surface[pos]):
            out.append(("zero_width", insert_zero_width(surface, pos)))
    if surface and not any(ch in BIDI_CONTROLS for ch in surface):
        out.append(("bidi", bidi_reverse(surface)))
    return out


def _is_wordchar(ch: str) -> bool:
    return ch.isalnum() or ch == "_"
