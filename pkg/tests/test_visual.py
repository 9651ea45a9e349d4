import random
import string

import numpy as np
import pytest

import bannercloak as bc
from bannercloak.visual import (
    BIDI_PREFIX,
    BIDI_SUFFIX,
    strip_perturbation_controls,
    unreverse_bidi_spans,
    visual_variants,
)


def test_homoglyph_table_shape(visual_space):
    # every target differs from its source, folds back uniquely, and the
    # canonical Cyrillic 'a' and 'c' pairs from the shipped table are present
    fold = visual_space.fold_map
    seen = set()
    for src, targets in visual_space.homoglyphs.items():
        for tgt in targets:
            assert tgt != src
            assert tgt not in seen  # unambiguous folding
            seen.add(tgt)
            assert fold[tgt] == src
    assert "а" in visual_space.homoglyphs["a"]
    assert "с" in visual_space.homoglyphs["c"]


def test_homoglyph_substitute_examples(visual_space):
    rng = np.random.default_rng(0)
    out = bc.homoglyph_substitute("admin", 0, rng)
    assert out is not None and out != "admin"
    assert len(out) == len("admin")
    assert out[1:] == "dmin"
    assert out[0] in visual_space.homoglyphs["a"]

    out = bc.homoglyph_substitute("dcs", 1, np.random.default_rng(1))
    assert out == "dсs"

    assert bc.homoglyph_substitute("x-y", 1, rng) is None  # '-' has no entry


def test_homoglyph_substitute_position_bounds():
    with pytest.raises(ValueError):
        bc.homoglyph_substitute("abc", 3, np.random.default_rng(0))


def test_insert_zero_width():
    assert bc.insert_zero_width("router", 3) == "rou​ter"
    assert bc.token_texts(bc.insert_zero_width("router", 3)) == ["rou", "ter"]
    assert bc.insert_zero_width("ab", 1) == "a​b"
    for bad in (0, 2):
        with pytest.raises(ValueError):
            bc.insert_zero_width("ab", bad)


def test_bidi_reverse_wrap_sequence():
    wrapped = bc.bidi_reverse("dcs")
    assert wrapped == "‭⁦‮scd⁩‬"
    assert wrapped.startswith(BIDI_PREFIX) and wrapped.endswith(BIDI_SUFFIX)


def test_bidi_reverse_single_char_identity():
    assert bc.unwrap_bidi(bc.bidi_reverse("a")) == "a"
    inner = bc.bidi_reverse("a")[len(BIDI_PREFIX) : -len(BIDI_SUFFIX)]
    assert inner == "a"


def test_bidi_round_trip():
    assert bc.unwrap_bidi(bc.bidi_reverse("932l")) == "932l"


def test_bidi_rejects_nested():
    with pytest.raises(ValueError):
        bc.bidi_reverse(bc.bidi_reverse("abc"))
    with pytest.raises(ValueError):
        bc.bidi_reverse("")


def test_unreverse_bidi_spans_inside_text():
    text = "pre " + bc.bidi_reverse("dcs") + " post"
    assert unreverse_bidi_spans(text) == "pre dcs post"


def test_normalize_visual_oracle_exhaustive_over_table(visual_space):
    """For every table entry, substituting that homoglyph is undone by the
    normalization oracle."""
    for src, targets in visual_space.homoglyphs.items():
        word = f"x{src}y"
        for tgt in targets:
            perturbed = f"x{tgt}y"
            assert bc.normalize_visual(perturbed) == bc.fold_homoglyphs(word) == word


def test_normalize_visual_random_round_trips(visual_space):
    """1,000 random zero-width / bidi round-trips through the oracle."""
    rng = random.Random(7)
    nprng = np.random.default_rng(7)
    alphabet = string.ascii_letters + string.digits
    for i in range(1000):
        word = "".join(rng.choice(alphabet) for _ in range(rng.randrange(2, 12)))
        op = i % 3
        if op == 0:
            mutated = bc.insert_zero_width(word, rng.randrange(1, len(word)))
        elif op == 1:
            mutated = bc.bidi_reverse(word)
        else:
            mutated = bc.homoglyph_substitute(word, rng.randrange(len(word)), nprng)
            if mutated is None:
                continue
        assert bc.normalize_visual(mutated) == bc.fold_homoglyphs(word)


def test_visual_variants_enumeration(visual_space):
    variants = dict()
    for kind, text in visual_variants("admin"):
        variants.setdefault(kind, []).append(text)
    # homoglyphs at every eligible position
    expected_homoglyphs = sum(
        len(visual_space.homoglyphs.get(ch, ())) for ch in "admin"
    )
    assert len(variants["homoglyph"]) == expected_homoglyphs
    assert "аdmin" in variants["homoglyph"]
    assert variants["zero_width"] == [
        "a​dmin", "ad​min", "adm​in", "admi​n",
    ]
    assert variants["bidi"] == [bc.bidi_reverse("admin")]


def test_visual_variants_skip_punctuation_splits():
    kinds = [(k, t) for k, t in visual_variants("a-b")]
    zw = [t for k, t in kinds if k == "zero_width"]
    assert zw == []  # splitting next to '-' would strand it at a token edge


def test_strip_perturbation_controls():
    assert strip_perturbation_controls("a​b‭cd") == "abcd"
