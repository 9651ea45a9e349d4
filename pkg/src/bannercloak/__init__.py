"""bannercloak: adversarial perturbation of IoT device banners.

Crafts banner variants -- plausible word substitutions and visually
invisible Unicode edits -- that defeat learning-based and string-matching
device-fingerprint scanners, and measures attack success, modification
cost, query cost, and visual consistency.
"""

from .candidates import Candidate, candidate_set
from .core import (
    FR,
    IMR,
    NFR,
    Banner,
    DataError,
    Labels,
    Token,
    TokenizedBanner,
    load_corpus,
    partition_regions,
    preprocess,
    save_corpus,
    token_texts,
    tokenize,
)
from .embedding import (
    CooccurrenceEmbedding,
    load_embedding,
    save_embedding,
    train_embedding,
)
from .evasion import (
    AttackParams,
    AttackResult,
    Edit,
    apply_edit_trace,
    attack_learning,
    attack_matching,
    importance_scores,
    load_results,
    mutation_probabilities,
    original_rule_still_matches,
    random_factor,
    save_results,
    select_optimal,
)
from .metrics import (
    EvalSummary,
    attacker_filter,
    banner_jaccard,
    cosine,
    edit_distance,
    evaluate,
    jaccard,
    visual_consistency_check,
)
from .scanners import (
    LearningScanner,
    MatchRuleset,
    Rule,
    ShadowModel,
    TrainConfig,
    load_ruleset,
    load_scanner,
    match,
    match_rule,
    save_ruleset,
    save_scanner,
    train_learning_scanner,
    train_shadow,
)
from .semantic import (
    SemanticSpace,
    build_semantic_space,
    load_semantic_space,
    nearest_semantic,
    save_semantic_space,
)
from .synth import gen_corpus, gen_ruleset, make_families
from .visual import (
    VisualSpace,
    bidi_reverse,
    default_visual_space,
    fold_homoglyphs,
    homoglyph_substitute,
    insert_zero_width,
    load_homoglyph_table,
    normalize_visual,
    unwrap_bidi,
)

__version__ = "0.1.0"
