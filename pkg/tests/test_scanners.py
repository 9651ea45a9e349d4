import numpy as np
import pytest

import bannercloak as bc
from bannercloak.core import DataError
from bannercloak.scanners import Rule, _softmax


def _two_banner_corpus():
    return [
        bc.Banner("a", "http", "alpha words here online", bc.Labels("t", "m", "prod-a")),
        bc.Banner("b", "http", "beta other tokens offline", bc.Labels("t", "m", "prod-b")),
    ]


def test_separable_two_banner_training():
    corpus = _two_banner_corpus()
    scanner = bc.train_learning_scanner(
        corpus, "product", bc.TrainConfig(holdout=0.0, epochs=400)
    )
    for banner in corpus:
        label, probs = scanner.predict(banner.raw)
        assert label == banner.labels.product
        assert probs[scanner.labels.index(label)] > 0.5


def test_single_label_corpus_rejected():
    corpus = [
        bc.Banner("a", "http", "x", bc.Labels("t", "m", "only")),
        bc.Banner("b", "http", "y", bc.Labels("t", "m", "only")),
    ]
    with pytest.raises(DataError):
        bc.train_learning_scanner(corpus, "product")


def test_probabilities_sum_to_one_on_random_banners():
    rng = np.random.default_rng(0)
    corpus = bc.gen_corpus(60, 5, seed=1)
    scanner = bc.train_learning_scanner(corpus, "product")
    words = ["alpha", "boa", "dcs-932l", "xyzzy", "online", "росс", "​"]
    for _ in range(1000):
        text = " ".join(words[i] for i in rng.integers(0, len(words), size=rng.integers(0, 9)))
        _, probs = scanner.predict(text)
        assert np.all(probs >= 0)
        assert abs(float(probs.sum()) - 1.0) < 1e-9
        assert len(probs) == len(scanner.labels)


def test_oov_banner_prior_and_tie_break():
    corpus = _two_banner_corpus()
    scanner = bc.train_learning_scanner(corpus, "product", bc.TrainConfig(holdout=0.0))
    label, probs = scanner.predict("zzz qqq completely unseen")
    assert np.allclose(probs, _softmax(scanner.bias))
    assert label == scanner.labels[int(np.argmax(probs))]
    # exact tie: zeroed bias must resolve to the lowest label index
    scanner.bias = np.zeros_like(scanner.bias)
    label, probs = scanner.predict("zzz qqq")
    assert label == scanner.labels[0]
    assert np.allclose(probs, 1.0 / len(scanner.labels))


def test_label_permutation_permutes_weight_rows():
    corpus = _two_banner_corpus()
    scanner = bc.train_learning_scanner(corpus, "product", bc.TrainConfig(holdout=0.0))
    renamed = [
        bc.Banner(b.id, b.protocol, b.raw,
                  bc.Labels("t", "m", {"prod-a": "z-late", "prod-b": "a-early"}[b.labels.product]))
        for b in corpus
    ]
    scanner2 = bc.train_learning_scanner(renamed, "product", bc.TrainConfig(holdout=0.0))
    # prod-a sorts first originally; z-late sorts last after renaming
    assert scanner.labels == ["prod-a", "prod-b"]
    assert scanner2.labels == ["a-early", "z-late"]
    assert np.allclose(scanner.weights[0], scanner2.weights[1])
    assert np.allclose(scanner.weights[1], scanner2.weights[0])


def test_scanner_round_trip(tmp_path):
    corpus = bc.gen_corpus(40, 4, seed=3)
    scanner = bc.train_learning_scanner(corpus, "product")
    path = tmp_path / "scanner.json"
    bc.save_scanner(scanner, path)
    loaded = bc.load_scanner(path)
    for banner in corpus[:10]:
        l1, p1 = scanner.predict(banner.raw)
        l2, p2 = loaded.predict(banner.raw)
        assert l1 == l2
        assert np.allclose(p1, p2, atol=1e-9)


# --- matching scanner ---------------------------------------------------------


def _ruleset():
    return bc.MatchRuleset(
        rules=[
            Rule("dcs-932l", "literal", "d-link dcs-932l", "product"),
            Rule(r"(?i)\bwnr2000\b", "regex", "netgear wnr2000", "product"),
            Rule("d-link", "literal", "d-link", "manufacturer"),
        ]
    )


def test_match_case_insensitive_literal():
    assert bc.match(_ruleset(), "Title: DCS-932l camera") == "d-link dcs-932l"


def test_match_broken_by_zero_width():
    assert bc.match(_ruleset(), "dcs-932​l") is None


def test_match_order_precedence():
    # both the product literal and the manufacturer literal match; the
    # earlier rule wins
    assert bc.match(_ruleset(), "d-link dcs-932l page") == "d-link dcs-932l"
    flipped = bc.MatchRuleset(rules=[_ruleset().rules[2], _ruleset().rules[0]])
    assert bc.match(flipped, "d-link dcs-932l page") == "d-link"


def test_match_permuting_disjoint_rules_is_stable():
    rules = [
        Rule("alpha", "literal", "la", "product"),
        Rule("beta", "literal", "lb", "product"),
        Rule("gamma", "literal", "lc", "product"),
    ]
    texts = ["has alpha only", "has beta only", "has gamma only", "none of them"]
    base = [bc.match(bc.MatchRuleset(rules=list(rules)), t) for t in texts]
    for perm in ([1, 0, 2], [2, 1, 0], [1, 2, 0]):
        shuffled = bc.MatchRuleset(rules=[rules[i] for i in perm])
        assert [bc.match(shuffled, t) for t in texts] == base


def test_match_none_and_empty_ruleset():
    assert bc.match(_ruleset(), "nothing relevant") is None
    with pytest.raises(DataError):
        bc.match(bc.MatchRuleset(rules=[]), "x")


def test_rule_validation():
    with pytest.raises(DataError):
        Rule("(unclosed", "regex", "l", "product")
    with pytest.raises(DataError):
        Rule("x", "literal", "", "product")
    with pytest.raises(DataError):
        Rule("x", "glob", "l", "product")


def test_ruleset_round_trip(tmp_path):
    ruleset = bc.gen_ruleset(6, 30)
    path = tmp_path / "rules.json"
    bc.save_ruleset(ruleset, path)
    loaded = bc.load_ruleset(path)
    assert [r for r in loaded.rules] == [r for r in ruleset.rules]


# --- shadow -------------------------------------------------------------------


def test_shadow_agreement_and_label_subset():
    corpus = bc.gen_corpus(200, 6, seed=5)
    ruleset = bc.gen_ruleset(6)
    shadow = bc.train_shadow(ruleset, corpus)
    rule_labels = {r.label for r in ruleset.rules}
    assert set(shadow.labels) <= rule_labels
    assert shadow.agreement is not None and shadow.agreement >= 0.9


def test_shadow_memorizes_distinct_literals():
    rules = [
        Rule("uniqalpha", "literal", "la", "product"),
        Rule("uniqbeta", "literal", "lb", "product"),
    ]
    corpus = []
    for i in range(10):
        corpus.append(bc.Banner(f"a{i}", "http", f"uniqalpha filler {i} text"))
        corpus.append(bc.Banner(f"b{i}", "http", f"uniqbeta filler {i} text"))
    shadow = bc.train_shadow(
        bc.MatchRuleset(rules=rules), corpus, bc.TrainConfig(epochs=400, holdout=0.2)
    )
    assert shadow.agreement == 1.0


def test_shadow_excludes_unmatched_banners():
    rules = [
        Rule("alpha", "literal", "la", "product"),
        Rule("beta", "literal", "lb", "product"),
    ]
    corpus = [
        *[bc.Banner(f"a{i}", "http", f"alpha one two {i}") for i in range(4)],
        *[bc.Banner(f"b{i}", "http", f"beta three four {i}") for i in range(4)],
        bc.Banner("u", "http", "nothing to match here"),
    ]
    shadow = bc.train_shadow(bc.MatchRuleset(rules=rules), corpus, bc.TrainConfig(holdout=0.0))
    assert "nothing" not in shadow.scanner.vocab  # unmatched banner dropped


def test_shadow_needs_two_matched_labels():
    rules = [Rule("alpha", "literal", "la", "product")]
    corpus = [bc.Banner("a", "http", "alpha x"), bc.Banner("b", "http", "alpha y")]
    with pytest.raises(DataError):
        bc.train_shadow(bc.MatchRuleset(rules=rules), corpus)
