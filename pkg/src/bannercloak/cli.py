"""Command-line pipeline: corpus generation, space/embedding/scanner
builds, attack execution, evaluation, and reports.

Every command reads declared inputs, writes declared outputs, prints a
one-line summary, and exits 0 on success.  Failures are categorized: exit 3
for I/O problems, 4 for bad configuration, 5 for malformed data, 6 for
anything else; unknown subcommands exit 2 with usage text.  The --seed flag
governs every random choice, and per-banner attack seeds are derived from
(seed, banner position), so --jobs never changes results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import DataError, load_corpus, save_corpus
from .embedding import load_embedding, save_embedding, train_embedding
from .evasion import (
    AttackParams,
    attack_learning,
    attack_matching,
    load_results,
    save_results,
)
from .metrics import EvalSummary, evaluate, format_summary_table
from .scanners import (
    TrainConfig,
    load_ruleset,
    load_scanner,
    match,
    save_ruleset,
    save_scanner,
    train_learning_scanner,
    train_shadow,
)
from .semantic import build_semantic_space, load_semantic_space, save_semantic_space
from .synth import gen_corpus, gen_ruleset

EXIT_IO = 3
EXIT_CONFIG = 4
EXIT_DATA = 5
EXIT_ALGORITHM = 6

# Sharp defaults for shadow training: the matcher's semantics are hard
# literal-presence tests, so the imitation is trained to near-saturation.
SHADOW_CONFIG = TrainConfig(lr=2.0, epochs=1500, l2=0.0)


def _require(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _outpath(path: str) -> str:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def banner_seed(seed: int, position: int) -> int:
    """Stable per-banner attack seed, independent of worker scheduling."""
    return int(np.random.SeedSequence([seed, position]).generate_state(1)[0])


def _add_attack_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float, default=0.85, help="minimum Jaccard similarity")
    p.add_argument("--max-iter", type=int, default=20, help="iteration limit T")
    p.add_argument("--top-k", type=int, default=20, help="perturbation positions K")
    p.add_argument("--per-slot", type=int, default=8, help="candidates per position P")
    p.add_argument("--a", type=float, default=0.8, dest="a")
    p.add_argument("--b", type=float, default=0.2, dest="b")
    p.add_argument("--query-budget", type=int, default=0)
    p.add_argument(
        "--cos-threshold", type=float, default=0.0,
        help="cosine floor for semantic candidates",
    )
    p.add_argument("--no-visual-in-nfr", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bannercloak",
        description="Adversarial perturbation of IoT device banners.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a synthetic labeled banner corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--labels", type=int, default=10, help="number of product families")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ruleset-out", help="also emit a matching ruleset derived from the families")
    p.add_argument("--rules", type=int, default=50, help="ruleset size for --ruleset-out")

    p = sub.add_parser("train-scanner", help="train the learning-based scanner")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--granularity", default="product", choices=["type", "manufacturer", "product"])
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train-embedding", help="train the co-occurrence embedding")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("build-space", help="build the per-label semantic keyword space")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scanner", help="scanner checkpoint used for importance ranking")
    p.add_argument("--ruleset", help="bucket by this ruleset's matched labels instead")
    p.add_argument("--top-l", type=int, default=20)
    p.add_argument("--granularity", default="product", choices=["type", "manufacturer", "product"])
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("attack-learning", help="attack the learning-based scanner")
    p.add_argument("--corpus", required=True)
    p.add_argument("--scanner", required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int, default=0, help="attack only the first N banners")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_attack_flags(p)

    p = sub.add_parser("attack-matching", help="attack the matching-based scanner")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ruleset", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--space", help="semantic space (default: built from matched labels)")
    p.add_argument("--cos-threshold", type=float, default=0.8)
    p.add_argument("--top-l", type=int, default=20)
    p.add_argument("--limit", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shadow-lr", type=float, default=SHADOW_CONFIG.lr)
    p.add_argument("--shadow-epochs", type=int, default=SHADOW_CONFIG.epochs)

    p = sub.add_parser("evaluate", help="aggregate attack results into SR/MR/QN/VC")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scanner")
    p.add_argument("--corpus", help="corpus with ground-truth labels (for --filtered)")
    p.add_argument("--filtered", action="store_true")
    p.add_argument("--granularity")

    p = sub.add_parser(
        "filter-experiment",
        help="before/after accuracy when the adversary scrubs our obfuscation",
    )
    p.add_argument("--results", required=True)
    p.add_argument("--scanner", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="render summary JSON files as a plain-text table")
    p.add_argument("--summary", required=True, nargs="+")
    p.add_argument("--out")
    return parser


def _truth_labels(corpus, granularity: str) -> dict:
    out = {}
    for b in corpus:
        if b.labels is not None:
            try:
                out[b.id] = b.labels.get(granularity)
            except DataError:
                pass
    return out


# Worker state for --jobs: artifacts are loaded once per process.
_WORKER: dict = {}


def _learning_worker_init(scanner_path, space_path, emb_path, base):
    _WORKER["scanner"] = load_scanner(scanner_path)
    _WORKER["space"] = load_semantic_space(space_path)
    _WORKER["emb"] = load_embedding(emb_path)
    _WORKER["base"] = base


def _learning_worker(job):
    position, banner_json = job
    from .core import banner_from_json

    base = _WORKER["base"]
    params = AttackParams(**{**base, "seed": banner_seed(base["seed"], position)})
    result = attack_learning(
        _WORKER["scanner"], banner_from_json(banner_json), _WORKER["space"], _WORKER["emb"], params
    )
    return result.to_json()


def cmd_gen_corpus(args) -> str:
    corpus = gen_corpus(args.n, args.labels, args.seed)
    save_corpus(corpus, _outpath(args.out))
    extra = ""
    if args.ruleset_out:
        ruleset = gen_ruleset(args.labels, args.rules)
        save_ruleset(ruleset, _outpath(args.ruleset_out))
        extra = f", {len(ruleset)} rules -> {args.ruleset_out}"
    return f"gen-corpus: wrote {len(corpus)} banners over {args.labels} labels -> {args.out}{extra}"


def cmd_train_scanner(args) -> str:
    corpus = load_corpus(_require(args.corpus, "corpus file"))
    hyper = TrainConfig(lr=args.lr, epochs=args.epochs, seed=args.seed)
    scanner = train_learning_scanner(corpus, args.granularity, hyper)
    save_scanner(scanner, _outpath(args.out))
    acc = f"{scanner.holdout_accuracy:.4f}" if scanner.holdout_accuracy is not None else "n/a"
    return (
        f"train-scanner: {len(scanner.labels)} {args.granularity} labels, "
        f"held-out accuracy {acc} -> {args.out}"
    )


def cmd_train_embedding(args) -> str:
    corpus = load_corpus(_require(args.corpus, "corpus file"))
    emb = train_embedding(
        corpus,
        dim=args.dim,
        epochs=args.epochs,
        lr=args.lr,
        seed=args.seed,
        min_count=args.min_count,
    )
    save_embedding(emb, _outpath(args.out))
    return (
        f"train-embedding: |V|={len(emb.vocab)} d={emb.dim} "
        f"loss {emb.loss_history[0]:.1f} -> {emb.loss_history[-1]:.1f} -> {args.out}"
    )


def cmd_build_space(args) -> str:
    corpus = load_corpus(_require(args.corpus, "corpus file"))
    if args.ruleset:
        ruleset = load_ruleset(_require(args.ruleset, "ruleset file"))
        labels = [match(ruleset, b.raw) for b in corpus]
        scorer = train_shadow(ruleset, corpus, SHADOW_CONFIG)
        space = build_semantic_space(corpus, scorer, args.top_l, labels=labels)
    elif args.scanner:
        scanner = load_scanner(_require(args.scanner, "scanner checkpoint"))
        space = build_semantic_space(corpus, scanner, args.top_l, granularity=args.granularity)
    else:
        raise ValueError("build-space needs --scanner or --ruleset")
    save_semantic_space(space, _outpath(args.out))
    skipped = f", skipped {space.skipped}" if space.skipped else ""
    return f"build-space: {len(space.entries)} label buckets (top-l={args.top_l}{skipped}) -> {args.out}"


def cmd_attack_learning(args) -> str:
    corpus = load_corpus(_require(args.corpus, "corpus file"))
    if args.limit:
        corpus = corpus[: args.limit]
    base = dict(
        max_iterations=args.max_iter,
        top_k=args.top_k,
        per_slot=args.per_slot,
        theta=args.theta,
        a=args.a,
        b=args.b,
        seed=args.seed,
        query_budget=args.query_budget,
        cos_threshold=args.cos_threshold,
        visual_in_nfr=not args.no_visual_in_nfr,
    )
    _require(args.scanner, "scanner checkpoint")
    _require(args.space, "semantic space file")
    _require(args.embedding, "embedding file")
    if args.jobs > 1:
        payload = [
            (i, {"id": b.id, "protocol": b.protocol, "banner": b.raw,
                 "labels": b.labels.as_dict() if b.labels else None})
            for i, b in enumerate(corpus)
        ]
        with ProcessPoolExecutor(
            max_workers=args.jobs,
            initializer=_learning_worker_init,
            initargs=(args.scanner, args.space, args.embedding, base),
        ) as pool:
            dicts = list(pool.map(_learning_worker, payload, chunksize=4))
        from .evasion import AttackResult

        results = [AttackResult.from_json(d) for d in dicts]
    else:
        scanner = load_scanner(args.scanner)
        space = load_semantic_space(args.space)
        emb = load_embedding(args.embedding)
        results = []
        for i, b in enumerate(corpus):
            params = AttackParams(**{**base, "seed": banner_seed(args.seed, i)})
            results.append(attack_learning(scanner, b, space, emb, params))
    save_results(results, _outpath(args.out))
    sr = sum(r.success for r in results) / len(results) if results else 0.0
    return f"attack-learning: {len(results)} banners, SR={sr:.4f} -> {args.out}"


def cmd_attack_matching(args) -> str:
    corpus = load_corpus(_require(args.corpus, "corpus file"))
    ruleset = load_ruleset(_require(args.ruleset, "ruleset file"))
    emb = load_embedding(_require(args.embedding, "embedding file"))
    shadow_cfg = TrainConfig(lr=args.shadow_lr, epochs=args.shadow_epochs, l2=0.0, seed=args.seed)
    shadow = train_shadow(ruleset, corpus, shadow_cfg)
    if args.space:
        space = load_semantic_space(_require(args.space, "semantic space file"))
    else:
        labels = [match(ruleset, b.raw) for b in corpus]
        space = build_semantic_space(corpus, shadow, args.top_l, labels=labels)
    attacked = corpus[: args.limit] if args.limit else corpus
    results = [
        attack_matching(ruleset, shadow, b, space, emb, args.cos_threshold) for b in attacked
    ]
    save_results(results, _outpath(args.out))
    sr = sum(r.success for r in results) / len(results) if results else 0.0
    agree = f"{shadow.agreement:.4f}" if shadow.agreement is not None else "n/a"
    return (
        f"attack-matching: {len(results)} banners, shadow agreement {agree}, "
        f"SR={sr:.4f} -> {args.out}"
    )


def _write_summary(summary: EvalSummary, path) -> None:
    with open(_outpath(path), "w", encoding="utf-8") as fh:
        json.dump(summary.to_json(), fh, ensure_ascii=True, sort_keys=True)
        fh.write("\n")


def cmd_evaluate(args) -> str:
    results = load_results(_require(args.results, "results file"))
    scanner = load_scanner(_require(args.scanner, "scanner checkpoint")) if args.scanner else None
    truth = None
    if args.corpus:
        corpus = load_corpus(_require(args.corpus, "corpus file"))
        granularity = args.granularity or (scanner.granularity if scanner else "product")
        truth = _truth_labels(corpus, granularity)
    summary = evaluate(
        results, scanner, filtered=args.filtered, truth=truth, granularity=args.granularity
    )
    _write_summary(summary, args.out)
    line = (
        f"evaluate: n={summary.n} SR={summary.sr:.4f} MR={summary.mr_mean:.4f} "
        f"QN={summary.qn_mean:.2f} VC={summary.vc_pass:.4f}"
    )
    if summary.filtered:
        line += (
            f" | clean={summary.acc_clean:.4f} adversarial={summary.acc_adversarial:.4f} "
            f"filtered={summary.acc_filtered:.4f}"
        )
    return line + f" -> {args.out}"


def cmd_filter_experiment(args) -> str:
    results = load_results(_require(args.results, "results file"))
    scanner = load_scanner(_require(args.scanner, "scanner checkpoint"))
    corpus = load_corpus(_require(args.corpus, "corpus file"))
    truth = _truth_labels(corpus, scanner.granularity)
    summary = evaluate(results, scanner, filtered=True, truth=truth)
    _write_summary(summary, args.out)
    return (
        f"filter-experiment: clean={summary.acc_clean:.4f} "
        f"adversarial={summary.acc_adversarial:.4f} filtered={summary.acc_filtered:.4f} "
        f"-> {args.out}"
    )


def cmd_report(args) -> str:
    rows = []
    for path in args.summary:
        with open(_require(path, "summary file"), "r", encoding="utf-8") as fh:
            data = json.load(fh)
        summary = EvalSummary(
            sr=data["sr"],
            mr_mean=data["mr_mean"],
            qn_mean=data["qn_mean"],
            vc_pass=data["vc_pass"],
            n=data["n"],
            granularity=data.get("granularity", "unknown"),
            filtered=data.get("filtered", False),
            acc_clean=data.get("acc_clean"),
            acc_adversarial=data.get("acc_adversarial"),
            acc_filtered=data.get("acc_filtered"),
        )
        rows.append((os.path.basename(path), summary))
    table = format_summary_table(rows)
    if args.out:
        with open(_outpath(args.out), "w", encoding="utf-8") as fh:
            fh.write(table + "\n")
    print(table)
    return f"report: {len(rows)} summaries"


_COMMANDS = {
    "gen-corpus": cmd_gen_corpus,
    "train-scanner": cmd_train_scanner,
    "train-embedding": cmd_train_embedding,
    "build-space": cmd_build_space,
    "attack-learning": cmd_attack_learning,
    "attack-matching": cmd_attack_matching,
    "evaluate": cmd_evaluate,
    "filter-experiment": cmd_filter_experiment,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        print(_COMMANDS[args.command](args))
        return 0
    except FileNotFoundError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error[algorithm]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM


if __name__ == "__main__":
    sys.exit(main())
