"""Build the two knowledge structures behind semantic substitution: the
co-occurrence embedding (which words behave alike across banners) and the
per-label keyword space (which words carry each device's identity).

Run: python demos/03_keyword_space.py
"""

import bannercloak as bc


def main() -> None:
    corpus = bc.gen_corpus(400, 10, seed=7)
    print(f"synthetic corpus: {len(corpus)} banners, 10 product labels")

    scanner = bc.train_learning_scanner(corpus, "product")
    print(f"scanner held-out accuracy: {scanner.holdout_accuracy:.3f}")

    emb = bc.train_embedding(corpus)
    print(f"embedding: |V|={len(emb.vocab)}, d={emb.dim}, "
          f"loss {emb.loss_history[0]:.0f} -> {emb.loss_history[-1]:.0f}")
    print()

    print("words that share banners end up close; words that never meet do not:")
    for a, b in [
        ("dcs-930l", "d-link"),
        ("dcs-930l", "dcs-932l"),
        ("dcs-930l", "hp"),
        ("wnr2000", "netgear"),
    ]:
        if a in emb and b in emb:
            print(f"  cosine({a!r}, {b!r}) = {emb.cosine(a, b):+.3f}")
    print()

    space = bc.build_semantic_space(corpus, scanner, 20, granularity="product")
    label = scanner.labels[0]
    print(f"keyword bucket for {label!r} (top-20 by term frequency):")
    print(f"  {space.entries[label]}")
    print()

    word = "dcs-932l"
    neighbors = bc.nearest_semantic(word, "dcs-932l", space, emb, threshold=0.0, k=5)
    print(f"nearest in-bucket substitutes for {word!r}: {neighbors}")


if __name__ == "__main__":
    main()
