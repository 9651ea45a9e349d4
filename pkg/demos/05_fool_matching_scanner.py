"""Attack a matching-based scanner (a ruleset of pattern -> label entries).

The ruleset returns no confidence scores, so a shadow model -- a learning
scanner trained to imitate the ruleset's labeling -- guides the search: every
token from the predicted label's keyword bucket is rewritten until the
shadow's verdict flips, then the real ruleset judges the result.

Run: python demos/05_fool_matching_scanner.py
"""

import bannercloak as bc
from bannercloak.cli import SHADOW_CONFIG
from bannercloak.evasion import original_rule_still_matches


def main() -> None:
    corpus = bc.gen_corpus(500, 10, seed=7)
    ruleset = bc.gen_ruleset(10, 50)
    print(f"ruleset: {len(ruleset)} rules "
          f"(product patterns first, then manufacturer, then device type)")

    shadow = bc.train_shadow(ruleset, corpus, SHADOW_CONFIG)
    print(f"shadow model imitates the ruleset with agreement {shadow.agreement:.3f}")

    emb = bc.train_embedding(corpus)
    matched = [bc.match(ruleset, b.raw) for b in corpus]
    space = bc.build_semantic_space(corpus, shadow, 20, labels=matched)
    print()

    banner = corpus[0]
    result = bc.attack_matching(ruleset, shadow, banner, space, emb, threshold=0.8)
    print(f"banner {banner.id}: ruleset said {result.original_label!r}")
    print(f"  after the attack it says {result.predicted_label!r} (success={result.success})")
    print(f"  shadow queries: {result.queries}, edits: {len(result.edits)}")
    for e in result.edits[:8]:
        print(f"    #{e.index:<3} {e.region:<3} {e.kind:<10} {e.before!r} -> {e.after!r}")
    if len(result.edits) > 8:
        print(f"    ... and {len(result.edits) - 8} more")
    print(f"  original rule still matches: {original_rule_still_matches(ruleset, result)}")
    print()

    total = 60
    results = [
        bc.attack_matching(ruleset, shadow, b, space, emb, 0.8) for b in corpus[:total]
    ]
    wins = sum(r.success for r in results)
    downgraded = sum(
        1 for r in results
        if r.success and r.predicted_label is not None
    )
    hidden = sum(1 for r in results if r.success and r.predicted_label is None)
    print(f"over {total} banners: SR={wins / total:.2f} "
          f"({downgraded} misrouted to another label, {hidden} no longer match anything)")


if __name__ == "__main__":
    main()
