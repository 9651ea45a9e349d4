"""What happens when the adversary fights back: a scanner operator who knows
about Unicode tricks can strip zero-width characters, un-reverse bidi spans,
and fold homoglyphs before classifying.  That recovers the purely visual
perturbations -- but word substitutions look like ordinary text and survive.

Run: python demos/06_adversary_filter.py
"""

import bannercloak as bc


def main() -> None:
    word = "rou​ter"
    print(f"filter demo: {word!r} -> {bc.attacker_filter(word)!r}")
    wrapped = "model " + bc.bidi_reverse("dcs-932l")
    print(f"            {wrapped!r} -> {bc.attacker_filter(wrapped)!r}")
    substituted = "model dcs-930l"  # semantic swap: indistinguishable from real text
    print(f"            {substituted!r} -> {bc.attacker_filter(substituted)!r}")
    print()

    corpus = bc.gen_corpus(600, 10, seed=7)
    scanner = bc.train_learning_scanner(corpus, "product")
    emb = bc.train_embedding(corpus)
    space = bc.build_semantic_space(corpus, scanner, 20, granularity="product")

    attacked = corpus[:80]
    results = []
    for i, banner in enumerate(attacked):
        results.append(
            bc.attack_learning(scanner, banner, space, emb, bc.AttackParams(seed=i))
        )

    truth = {b.id: b.labels.product for b in corpus}
    summary = bc.evaluate(results, scanner, filtered=True, truth=truth)

    print(f"scanner accuracy on the original banners:     {summary.acc_clean:.3f}")
    print(f"scanner accuracy on adversarial banners:      {summary.acc_adversarial:.3f}")
    print(f"after the adversary's filter:                 {summary.acc_filtered:.3f}")
    print()
    print("The filter claws back the banners that relied on Unicode tricks")
    print("alone, but substituted keywords read like legitimate banner text,")
    print("so a large gap to clean accuracy remains.")


if __name__ == "__main__":
    main()
