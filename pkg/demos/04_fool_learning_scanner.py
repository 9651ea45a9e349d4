"""Attack a learning-based scanner end to end: rank token positions by the
confidence drop their deletion causes, perturb the top ones from the two
spaces, and iterate selection/mutation until the label flips while the
banner stays close to the original.

Run: python demos/04_fool_learning_scanner.py
"""

import bannercloak as bc


def main() -> None:
    corpus = bc.gen_corpus(500, 10, seed=7)
    scanner = bc.train_learning_scanner(corpus, "product")
    emb = bc.train_embedding(corpus)
    space = bc.build_semantic_space(corpus, scanner, 20, granularity="product")
    print(f"scanner accuracy {scanner.holdout_accuracy:.3f} over {len(scanner.labels)} products")
    print()

    banner = corpus[0]
    params = bc.AttackParams(seed=42)  # T=20, K=20, theta=0.85, a=0.8, b=0.2
    result = bc.attack_learning(scanner, banner, space, emb, params)

    print(f"banner {banner.id} ({banner.labels.product})")
    print(f"  scanner verdict before: {result.original_label}")
    print(f"  scanner verdict after:  {result.predicted_label}")
    print(f"  success={result.success} in {result.iterations_used} iteration(s), "
          f"{result.queries} queries, Jaccard {result.jaccard:.3f}")
    print()
    print("edit trace (token index, region, operation):")
    for e in result.edits:
        print(f"  #{e.index:<3} {e.region:<3} {e.kind:<10} {e.before!r} -> {e.after!r}")
    print()

    total = 30
    wins = 0
    queries = []
    for i, b in enumerate(corpus[:total]):
        r = bc.attack_learning(scanner, b, space, emb, bc.AttackParams(seed=i))
        wins += r.success
        if r.success:
            queries.append(r.queries)
    print(f"over {total} banners: SR={wins / total:.2f}, "
          f"mean queries per success={sum(queries) / max(1, len(queries)):.0f}")


if __name__ == "__main__":
    main()
