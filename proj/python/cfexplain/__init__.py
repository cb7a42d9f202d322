"""Counterfactual-guided top-k word explanations for black-box sentiment classifiers."""

from ._cfexplain import (
    Approach,
    AuthError,
    CallStats,
    DatasetKind,
    DcrRecord,
    Document,
    EmptyInput,
    Error,
    ExplanationResult,
    Gateway,
    Label,
    LengthMismatch,
    Lexicon,
    LexiconOracle,
    MaskViolation,
    MissingBinding,
    ParseError,
    PromptStep,
    SchemaError,
    WeightVector,
    dcr,
    decision_changing_score,
    load_corpus,
    mask_words,
    normalize_word,
    parse_class_words,
    parse_label,
    parse_tagged,
    render,
    render_heatmap,
    report_table,
    run_approach,
    run_cfp,
    run_cfs,
    run_cli,
    run_dp,
    run_sampled,
    sample,
    stats,
    validate_mask_only_edits,
)

__version__ = "0.1.0"
