import pytest

import bannercloak as bc
from bannercloak.candidates import candidate_set
from bannercloak.core import DataError


def test_semantic_space_tf_ordering(toy_attack_setup):
    """Single banner 'aa bb aa' under one label: TF 2 beats TF 1."""
    _, scanner, _, _ = toy_attack_setup
    corpus = [
        bc.Banner("x", "http", "aa bb aa", bc.Labels("t", "m", "alpha-cam")),
        bc.Banner("y", "http", "cc dd", bc.Labels("t", "m", "beta-cam")),
    ]
    space = bc.build_semantic_space(corpus, scanner, 2, granularity="product")
    assert space.entries["alpha-cam"] == ["aa", "bb"]


def test_semantic_space_budget_and_dedup(toy_attack_setup):
    corpus, scanner, _, _ = toy_attack_setup
    space = bc.build_semantic_space(corpus, scanner, 5, granularity="product")
    for label, words in space.entries.items():
        assert len(words) <= 5
        assert len(set(words)) == len(words)


def test_semantic_space_rejects_zero_budget(toy_attack_setup):
    corpus, scanner, _, _ = toy_attack_setup
    with pytest.raises(ValueError):
        bc.build_semantic_space(corpus, scanner, 0, granularity="product")
    with pytest.raises(DataError):
        bc.build_semantic_space([], scanner, 3)


def test_semantic_space_skips_unlabeled(toy_attack_setup):
    corpus, scanner, _, _ = toy_attack_setup
    extended = list(corpus) + [bc.Banner("u", "http", "alpha unlabeled text here")]
    space = bc.build_semantic_space(extended, scanner, 5, granularity="product")
    assert space.skipped == 1


def test_semantic_space_determinism(toy_attack_setup, tmp_path):
    corpus, scanner, _, _ = toy_attack_setup
    s1 = bc.build_semantic_space(corpus, scanner, 6, granularity="product")
    s2 = bc.build_semantic_space(corpus, scanner, 6, granularity="product")
    p1, p2 = tmp_path / "s1.json", tmp_path / "s2.json"
    bc.save_semantic_space(s1, p1)
    bc.save_semantic_space(s2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert bc.load_semantic_space(p1).entries == s1.entries


def test_nearest_semantic_basics(toy_attack_setup):
    corpus, scanner, emb, space = toy_attack_setup
    label = "alpha-cam"
    # self excluded even at threshold 1.0
    hits = bc.nearest_semantic("alpha", label, space, emb, 1.0, 10)
    assert "alpha" not in hits
    # unknown label errors and names the known ones
    with pytest.raises(DataError) as err:
        bc.nearest_semantic("alpha", "nope", space, emb, 0.5, 3)
    assert "alpha-cam" in str(err.value)
    # unknown word yields empty
    assert bc.nearest_semantic("zzzzz", label, space, emb, 0.0, 3) == []
    with pytest.raises(ValueError):
        bc.nearest_semantic("alpha", label, space, emb, 1.5, 3)


def test_nearest_semantic_matches_brute_force(toy_attack_setup):
    corpus, scanner, emb, space = toy_attack_setup
    label = "alpha-cam"
    word = "alpha"
    k = 3
    got = bc.nearest_semantic(word, label, space, emb, -1.0, k)
    scored = []
    for cand in space.entries[label]:
        if cand != word and cand in emb:
            scored.append((-emb.cosine(word, cand), cand))
    scored.sort()
    assert got == [c for _, c in scored[:k]]
    assert len(got) == min(k, len(scored))


def _token(tb, text):
    return next(t for t in tb.tokens if t.text == text)


def test_candidate_set_regions(toy_attack_setup, visual_space):
    corpus, scanner, emb, space = toy_attack_setup
    raw = "<html><title>alpha</title><meta name=\"alpha\"><p>alpha beta</p></html>"
    tb = bc.partition_regions(bc.Banner("x", "http", raw))
    label = "alpha-cam"

    imr_tok = tb.tokens[4]  # the attribute occurrence inside <meta ...>
    assert imr_tok.region == "IMR"
    assert candidate_set(imr_tok, "alpha", label, space, visual_space, emb) == []

    fr_tok = _token(tb, "alpha")
    assert fr_tok.region == "FR"
    fr = candidate_set(fr_tok, "alpha", label, space, visual_space, emb)
    kinds = {c.kind for c in fr}
    assert kinds == {"homoglyph", "zero_width", "bidi"}  # visual only
    texts = {c.text for c in fr}
    assert "аlpha" in texts
    assert "al​pha" in texts
    assert bc.bidi_reverse("alpha") in texts

    nfr_tok = next(t for t in tb.tokens if t.text == "alpha" and t.region == "NFR")
    nfr = candidate_set(nfr_tok, "alpha", label, space, visual_space, emb, cos_threshold=-1.0)
    nfr_kinds = {c.kind for c in nfr}
    assert "semantic" in nfr_kinds and "homoglyph" in nfr_kinds
    without_visual = candidate_set(
        nfr_tok, "alpha", label, space, visual_space, emb,
        cos_threshold=-1.0, visual_in_nfr=False,
    )
    assert {c.kind for c in without_visual} == {"semantic"}


def test_candidates_always_differ_from_original(toy_attack_setup, visual_space):
    corpus, scanner, emb, space = toy_attack_setup
    for banner in corpus[:4]:
        clean = bc.preprocess(banner.raw, banner.protocol)
        tb = bc.partition_regions(bc.Banner(banner.id, banner.protocol, clean, banner.labels))
        label = banner.labels.product
        for tok in tb.tokens:
            for cand in candidate_set(
                tok, tb.surface(tok.index), label, space, visual_space, emb, cos_threshold=-1.0
            ):
                assert cand.text.lower() != tok.text
