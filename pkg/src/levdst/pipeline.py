"""The per-turn loop: encode, generate span, patch, query, respond.

Each turn encodes the previous state with the context window, asks the
generator for an edit span, patches the tracked state, resolves the KB
state (match-count band plus booking outcome) for the turn's active domain,
and asks the generator for the response conditioned on that category. The
response request carries the same encoded context: generation conditions on
the previous state, never on the updated one.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import fmean
from typing import Mapping

from .codec import (
    Diagnostic,
    encode_context,
    parse_full_state,
    parse_lev,
    target_token_count,
)
from .corpus import Corpus
from .generators import (
    FullSpanOracle,
    GeneratorContract,
    GeneratorError,
    GeneratorFactory,
    GoldOracle,
)
from .kb import KbState, KnowledgeBase, attempt_booking, categorize_kb_state, query
from .lev import LevSpan, apply_lev
from .state import (
    BookingOutcome,
    Dialogue,
    DialogueState,
    PipelineConfig,
    Schema,
    Turn,
    build_window,
)


@dataclass(frozen=True)
class TurnTrace:
    """Everything one turn produced, with per-stage wall-clock millis."""

    dialogue_id: str
    turn_index: int
    encoded_input: str
    raw_lev: str
    lev_span: LevSpan
    lev_diagnostics: tuple[Diagnostic, ...]
    state: DialogueState
    active_domain: str | None
    match_count: int | None
    booking: BookingOutcome
    kb_state: KbState
    raw_response: str
    lev_tokens: int
    response_tokens: int
    stage_ms: Mapping[str, float]

    @property
    def generator_ms(self) -> float:
        return self.stage_ms["lev"] + self.stage_ms["response"]

    @property
    def overhead_ms(self) -> float:
        return sum(v for k, v in self.stage_ms.items() if k not in ("lev", "response"))


@dataclass(frozen=True)
class DialogueRun:
    dialogue_id: str
    traces: tuple[TurnTrace, ...]

    @property
    def states(self) -> tuple[DialogueState, ...]:
        return tuple(t.state for t in self.traces)

    @property
    def responses(self) -> tuple[str, ...]:
        return tuple(t.raw_response for t in self.traces)


def _begin_turn(generator: GeneratorContract, dialogue_id: str, turn_index: int) -> None:
    hook = getattr(generator, "begin_turn", None)
    if hook is not None:
        hook(dialogue_id, turn_index)


def run_turn(
    prev_state: DialogueState,
    window,
    generator: GeneratorContract,
    kb: KnowledgeBase,
    schema: Schema,
    cfg: PipelineConfig,
    *,
    dialogue_id: str = "",
    turn_index: int = 1,
    turn: Turn | None = None,
    carry_domain: str | None = None,
) -> TurnTrace:
    """One full turn against ``generator``.

    The active domain is the last block of the parsed span, or the carried
    one when the span is empty; no active domain means no KB query ran.
    """
    stage_ms: dict[str, float] = {}

    def stage(name: str, start: float) -> None:
        stage_ms[name] = (time.perf_counter() - start) * 1000.0

    t0 = time.perf_counter()
    encoded = encode_context(prev_state, window, schema)
    stage("encode", t0)

    t0 = time.perf_counter()
    try:
        raw_lev = generator.lev_request(encoded)
    except GeneratorError as exc:
        raise GeneratorError(f"dialogue {dialogue_id!r} turn {turn_index}: {exc}") from exc
    stage("lev", t0)

    t0 = time.perf_counter()
    report = parse_lev(raw_lev, schema)
    stage("parse", t0)

    t0 = time.perf_counter()
    state = apply_lev(prev_state, report.span, schema)
    stage("apply", t0)

    t0 = time.perf_counter()
    active = report.span.blocks[-1][0] if report.span.blocks else carry_domain
    match_count = None
    if active is not None and kb.has_table(active):
        match_count = len(query(kb, state, active))
    if active is not None:
        booking = attempt_booking(turn, state, active, schema, cfg, dialogue_id)
    else:
        booking = BookingOutcome.NONE
    kb_state = categorize_kb_state(match_count, booking, active or "", cfg)
    stage("kb", t0)

    t0 = time.perf_counter()
    try:
        raw_response = generator.response_request(encoded, kb_state)
    except GeneratorError as exc:
        raise GeneratorError(f"dialogue {dialogue_id!r} turn {turn_index}: {exc}") from exc
    stage("response", t0)

    return TurnTrace(
        dialogue_id=dialogue_id,
        turn_index=turn_index,
        encoded_input=encoded,
        raw_lev=raw_lev,
        lev_span=report.span,
        lev_diagnostics=report.diagnostics,
        state=state,
        active_domain=active,
        match_count=match_count,
        booking=booking,
        kb_state=kb_state,
        raw_response=raw_response,
        lev_tokens=target_token_count(raw_lev),
        response_tokens=target_token_count(raw_response),
        stage_ms=stage_ms,
    )


def run_dialogue(
    dialogue: Dialogue,
    generator: GeneratorContract,
    kb: KnowledgeBase,
    schema: Schema,
    cfg: PipelineConfig,
    *,
    gold_history: bool = False,
) -> DialogueRun:
    """Thread the tracked state through a whole dialogue.

    Context windows use the generator's own responses unless
    ``gold_history`` is set, which substitutes the gold ones (the
    tracking-only evaluation mode).
    """
    users = [t.user_utterance for t in dialogue.turns]
    gold_responses = [t.gold_delex_response for t in dialogue.turns]
    generated: list[str] = []
    traces: list[TurnTrace] = []
    state = DialogueState()
    carry: str | None = None
    for index, turn in enumerate(dialogue.turns, start=1):
        history = gold_responses if gold_history else generated
        window = build_window(users, history, index, cfg.context_window)
        _begin_turn(generator, dialogue.id, index)
        trace = run_turn(
            state,
            window,
            generator,
            kb,
            schema,
            cfg,
            dialogue_id=dialogue.id,
            turn_index=index,
            turn=turn,
            carry_domain=carry,
        )
        traces.append(trace)
        state = trace.state
        carry = trace.active_domain
        generated.append(trace.raw_response)
    return DialogueRun(dialogue_id=dialogue.id, traces=tuple(traces))


def run_corpus(
    corpus: Corpus,
    generator_factory: GeneratorFactory,
    kb: KnowledgeBase,
    cfg: PipelineConfig,
    *,
    gold_history: bool = False,
    jobs: int = 1,
) -> list[DialogueRun]:
    """Run every dialogue; distinct dialogues may run on parallel workers.

    Each worker gets its own generator from the factory, and results come
    back in corpus order regardless of scheduling.
    """
    if jobs <= 1:
        generator = generator_factory()
        try:
            return [
                run_dialogue(d, generator, kb, corpus.schema, cfg, gold_history=gold_history)
                for d in corpus.dialogues
            ]
        finally:
            _close(generator)

    local = threading.local()
    created: list[GeneratorContract] = []
    lock = threading.Lock()

    def work(dialogue: Dialogue) -> DialogueRun:
        generator = getattr(local, "generator", None)
        if generator is None:
            generator = generator_factory()
            local.generator = generator
            with lock:
                created.append(generator)
        return run_dialogue(
            dialogue, generator, kb, corpus.schema, cfg, gold_history=gold_history
        )

    try:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, corpus.dialogues))
    finally:
        for generator in created:
            _close(generator)


def _close(generator: GeneratorContract) -> None:
    close = getattr(generator, "close", None)
    if close is not None:
        close()


def record_gold_replay(corpus: Corpus, kb: KnowledgeBase, cfg: PipelineConfig) -> list[dict]:
    """Record (kind, input, output) rows covering a gold end-to-end run.

    A wire generator replaying these rows behaves exactly like the
    in-process gold oracle on the same corpus and config.
    """
    runs = run_corpus(corpus, lambda: GoldOracle(corpus), kb, cfg)
    rows: list[dict] = []
    for run in runs:
        for trace in run.traces:
            rows.append({"kind": "lev", "input": trace.encoded_input, "output": trace.raw_lev})
            rows.append(
                {
                    "kind": "response",
                    "input": trace.encoded_input,
                    "output": trace.raw_response,
                }
            )
    return rows


def bench_not_latency(
    corpus: Corpus,
    cfg: PipelineConfig,
    mode: str,
    generator_factory: GeneratorFactory | None = None,
) -> dict[str, float]:
    """Mean generated tokens per turn (NoT) and mean per-turn latency.

    Mode 'lev' drives the edit-span turn loop; mode 'full_span' regenerates
    the whole state each turn. Without an explicit generator the matching
    gold replayer supplies the targets, so NoT measures exactly the
    serialized target lengths. Latency is wall-clock per turn, batch of
    one, and is the single report field that is a measurement rather than
    a deterministic value.
    """
    if mode not in ("lev", "full_span"):
        raise ValueError(f"unknown bench mode {mode!r}")
    schema = corpus.schema
    if generator_factory is None:
        generator_factory = (
            (lambda: GoldOracle(corpus)) if mode == "lev" else (lambda: FullSpanOracle(corpus))
        )
    generator = generator_factory()
    tokens: list[int] = []
    latencies: list[float] = []
    try:
        for dialogue in corpus.dialogues:
            users = [t.user_utterance for t in dialogue.turns]
            gold_responses = [t.gold_delex_response for t in dialogue.turns]
            state = DialogueState()
            for index, turn in enumerate(dialogue.turns, start=1):
                window = build_window(users, gold_responses, index, cfg.context_window)
                started = time.perf_counter()
                encoded = encode_context(state, window, schema)
                _begin_turn(generator, dialogue.id, index)
                text = generator.lev_request(encoded)
                if mode == "lev":
                    state = apply_lev(state, parse_lev(text, schema).span, schema)
                else:
                    state = parse_full_state(text, schema).state
                latencies.append((time.perf_counter() - started) * 1000.0)
                tokens.append(target_token_count(text))
    finally:
        _close(generator)
    if not tokens:
        return {"not": 0.0, "latency_ms": 0.0}
    return {"not": fmean(tokens), "latency_ms": fmean(latencies)}


def mean_not_of_targets(corpus: Corpus, mode: str) -> float:
    """Mean serialized target length per turn straight off the gold states."""
    from .codec import serialize_full_state, serialize_lev
    from .lev import compute_lev

    if mode not in ("lev", "full_span"):
        raise ValueError(f"unknown bench mode {mode!r}")
    schema = corpus.schema
    counts: list[int] = []
    for dialogue in corpus.dialogues:
        prev = DialogueState()
        for turn in dialogue.turns:
            if mode == "lev":
                text = serialize_lev(compute_lev(prev, turn.gold_state, schema), schema)
            else:
                text = serialize_full_state(turn.gold_state, schema)
            counts.append(target_token_count(text))
            prev = turn.gold_state
    return fmean(counts) if counts else 0.0
