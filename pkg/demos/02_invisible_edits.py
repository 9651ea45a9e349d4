"""The visual similarity space: three Unicode edits that survive rendering.

Each operation changes what a tokenizer or string matcher sees while the
rendered text stays (near-)identical for a human.  The normalization oracle
at the end is the machine-checkable definition of "looks the same".

Run: python demos/02_invisible_edits.py
"""

import numpy as np

import bannercloak as bc
from bannercloak.visual import visual_variants


def codepoints(text: str) -> str:
    return " ".join(f"U+{ord(ch):04X}" for ch in text)


def main() -> None:
    word = "dcs-932l"
    rng = np.random.default_rng(0)

    print(f"original word: {word!r}")
    print(f"  tokens: {bc.token_texts(word)}")
    print()

    swapped = bc.homoglyph_substitute(word, 1, rng)
    print(f"1) homoglyph substitution: {swapped!r}")
    print(f"   code points: {codepoints(swapped[:3])} ...")
    print(f"   a literal match for 'dcs-932l' now fails: {'dcs-932l' in swapped}")
    print()

    split = bc.insert_zero_width(word, 5)
    print(f"2) zero-width space insertion: {split!r}")
    print(f"   the scanner now sees two tokens: {bc.token_texts(split)}")
    print()

    wrapped = bc.bidi_reverse(word)
    print(f"3) bidi reversal: stored as {codepoints(wrapped)}")
    print(f"   the stored characters spell: {''.join(ch for ch in wrapped if ch.isprintable())!r}")
    print(f"   a bidi-aware renderer displays: {bc.unwrap_bidi(wrapped)!r}")
    print()

    print(f"all single-edit variants of {word!r}: {len(visual_variants(word))}")
    print()

    print("The visual-consistency oracle undoes every operation:")
    for variant in (swapped, split, wrapped):
        print(f"  normalize({variant!r:>40}) = {bc.normalize_visual(variant)!r}")


if __name__ == "__main__":
    main()
