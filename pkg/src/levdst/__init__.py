"""Minimal edit-span diffing, patching, and evaluation for dialogue state tracking."""

from .codec import (
    Diagnostic,
    IssueKind,
    ParseReport,
    StateParse,
    encode_context,
    parse_full_state,
    parse_lev,
    serialize_full_state,
    serialize_lev,
    target_token_count,
)
from .corpus import (
    SAMPLE_PRESETS,
    Corpus,
    CorpusFormatError,
    dump_corpus,
    load_corpus,
    load_schema_dict,
    save_corpus,
    schema_to_dict,
    state_to_triples,
    subsample,
)
from .generators import (
    ConformanceCheck,
    ConformanceReport,
    ExternalGenerator,
    FullSpanOracle,
    GeneratorContract,
    GeneratorError,
    GeneratorFactory,
    GoldOracle,
    NoisyOracle,
    parse_generator_spec,
    run_conformance,
)
from .kb import (
    KbLoadError,
    KbState,
    KnowledgeBase,
    attempt_booking,
    booking_reference,
    categorize_kb_state,
    dump_kb,
    lexicalize,
    load_kb,
    query,
)
from .lev import (
    DELETE,
    EditKind,
    LevSpan,
    SlotEdit,
    apply_lev,
    classify_edit,
    compute_lev,
    edit_count,
)
from .metrics import (
    REPORT_FIELDS,
    DstReport,
    MissingKbError,
    active_domains_per_turn,
    combined_score,
    corpus_bleu,
    inform_success,
    joint_goal_accuracy,
    report_json,
    report_table,
)
from .pipeline import (
    DialogueRun,
    TurnTrace,
    bench_not_latency,
    mean_not_of_targets,
    record_gold_replay,
    run_corpus,
    run_dialogue,
    run_turn,
)
from .state import (
    DONTCARE,
    BookingOutcome,
    Dialogue,
    DialogueState,
    Goal,
    PipelineConfig,
    Schema,
    SchemaMismatchError,
    Turn,
    Utterance,
    ValidationResult,
    build_window,
    context_window,
    normalize_value,
    validate_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
