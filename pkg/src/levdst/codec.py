"""Flat-text serialization and tolerant parsing of state edit spans.

Grammar, all tokens separated by single spaces:

    span        := <SOB> block* <EOB>
    full state  := block*                        (no wrappers, never NULL)
    block       := [domain] (slot value-token+)+
    context     := [full-state] <EOB> (utterance (<EOU> | <EOR>))+

Parsing is total: any input yields a best-effort result plus diagnostics,
never an exception. <SOB>/<EOB> are optional on input and mandatory on
serialized spans. Inside a block, value tokens accrete greedily until the
next known slot of the current domain, the next domain token, or the end;
a value token that happens to equal a sibling slot name therefore splits
the value. That mis-split is a limitation of the flat format itself, kept
deliberately.

A value consisting of the single token NULL denotes deletion in a span and
absence in a full state. Stored values are lowercased, so the uppercase
NULL token can never collide with a literal value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .lev import DELETE, EditValue, LevSpan
from .state import DialogueState, Schema, StateKey, Utterance, normalize_value
from .tokens import EOB, EOR, EOU, NULL_TOKEN, SOB, domain_token, is_domain_token


class IssueKind(enum.Enum):
    UNKNOWN_DOMAIN = "unknown_domain"
    UNKNOWN_SLOT = "unknown_slot"
    DANGLING_SLOT = "dangling_slot"
    ORPHAN_VALUE = "orphan_value"
    MISSING_TERMINATOR = "missing_terminator"


class Diagnostic(NamedTuple):
    position: int  # 0-based index into the whitespace tokens of the input
    kind: IssueKind


@dataclass(frozen=True)
class ParseReport:
    span: LevSpan
    diagnostics: tuple[Diagnostic, ...]

    @property
    def clean(self) -> bool:
        return not self.diagnostics


@dataclass(frozen=True)
class StateParse:
    state: DialogueState
    diagnostics: tuple[Diagnostic, ...]

    @property
    def clean(self) -> bool:
        return not self.diagnostics


def _render_blocks(blocks: Sequence[tuple[str, Sequence[tuple[str, EditValue]]]]) -> list[str]:
    parts: list[str] = []
    for domain, pairs in blocks:
        parts.append(domain_token(domain))
        for slot, value in pairs:
            parts.append(slot)
            parts.append(NULL_TOKEN if value is DELETE else str(value))
    return parts


def serialize_lev(lev: LevSpan, schema: Schema) -> str:
    """Canonical surface form of a span; the empty span is '<SOB> <EOB>'."""
    for domain, (slot, _) in lev.edits():
        schema.check_key(domain, slot)
    blocks = [(d, [(e.slot, e.new_value) for e in edits]) for d, edits in lev.blocks]
    return " ".join([SOB, *_render_blocks(blocks), EOB])


def serialize_full_state(state: DialogueState, schema: Schema) -> str:
    """Canonical unwrapped surface form of a whole state; empty state is ''."""
    blocks: list[tuple[str, list[tuple[str, EditValue]]]] = []
    for domain in schema.domains:
        pairs: list[tuple[str, EditValue]] = []
        for slot in schema.slots_of(domain):
            value = state.get(domain, slot)
            if value is not None:
                pairs.append((slot, value))
        if pairs:
            blocks.append((domain, pairs))
    for domain, slot in state.entries:
        schema.check_key(domain, slot)
    return " ".join(_render_blocks(blocks))


def _scan(text: str, schema: Schema) -> tuple[dict[StateKey, EditValue], tuple[Diagnostic, ...]]:
    """Shared tolerant scanner; returns collected edits plus diagnostics."""
    tokens = text.split()
    diags: list[Diagnostic] = []
    edits: dict[StateKey, EditValue] = {}

    start, end = 0, len(tokens)
    opened = bool(tokens) and tokens[0] == SOB
    if opened:
        start = 1
    if end > start and tokens[end - 1] == EOB:
        end -= 1
    elif opened:
        diags.append(Diagnostic(len(tokens), IssueKind.MISSING_TERMINATOR))

    domain: str | None = None
    in_bad_block = False
    in_bad_fragment = False
    preamble_flagged = False
    # Open edit: (domain, slot, slot position, value tokens collected so far).
    pending: tuple[str, str, int, list[str]] | None = None

    def close_edit() -> None:
        nonlocal pending
        if pending is None:
            return
        edit_domain, slot, pos, values = pending
        pending = None
        if not values:
            diags.append(Diagnostic(pos, IssueKind.DANGLING_SLOT))
        elif values == [NULL_TOKEN]:
            edits[(edit_domain, slot)] = DELETE
        else:
            edits[(edit_domain, slot)] = normalize_value(" ".join(values))

    i = start
    while i < end:
        pos = i
        tok = tokens[i]
        i += 1
        if tok == SOB:
            # Stray wrapper: acts as an edit boundary, never a value token.
            close_edit()
            in_bad_fragment = False
            continue
        if tok == EOB:
            # Interior terminator ends the payload; whatever trails is one
            # dropped fragment.
            close_edit()
            if i < end:
                diags.append(Diagnostic(i, IssueKind.ORPHAN_VALUE))
            return _finish(edits, diags)
        if is_domain_token(tok):
            close_edit()
            in_bad_fragment = False
            name = tok[1:-1]
            if schema.has_domain(name):
                domain = name
                in_bad_block = False
            else:
                diags.append(Diagnostic(pos, IssueKind.UNKNOWN_DOMAIN))
                domain = None
                in_bad_block = True
            continue
        if in_bad_block:
            continue
        if domain is None:
            if not preamble_flagged:
                diags.append(Diagnostic(pos, IssueKind.ORPHAN_VALUE))
                preamble_flagged = True
            continue
        if tok in schema.slot_set(domain):
            close_edit()
            in_bad_fragment = False
            pending = (domain, tok, pos, [])
            continue
        if pending is not None:
            pending[3].append(tok)
            continue
        if not in_bad_fragment:
            # Slot position holds something that is not a slot of this
            # domain; the token and its would-be value are one fragment.
            diags.append(Diagnostic(pos, IssueKind.UNKNOWN_SLOT))
            in_bad_fragment = True
    close_edit()
    return _finish(edits, diags)


def _finish(
    edits: dict[StateKey, EditValue], diags: list[Diagnostic]
) -> tuple[dict[StateKey, EditValue], tuple[Diagnostic, ...]]:
    return edits, tuple(diags)


def parse_lev(text: str, schema: Schema) -> ParseReport:
    """Parse span text into a canonical, schema-valid span. Total."""
    edits, diags = _scan(text, schema)
    return ParseReport(span=LevSpan.from_edits(edits, schema), diagnostics=diags)


def parse_full_state(text: str, schema: Schema) -> StateParse:
    """Parse full-state text. A NULL value denotes absence and is skipped."""
    edits, diags = _scan(text, schema)
    entries = {key: value for key, value in edits.items() if value is not DELETE}
    ordered: dict[StateKey, str] = {}
    for domain in schema.domains:
        for slot in schema.slots_of(domain):
            value = entries.get((domain, slot))
            if value is not None:
                ordered[(domain, slot)] = value  # type: ignore[assignment]
    return StateParse(state=DialogueState._from_normalized(ordered), diagnostics=diags)


def encode_context(
    prev_state: DialogueState, window: Sequence[Utterance], schema: Schema
) -> str:
    """Generator input: previous state, then the tagged context window.

    Every utterance is passed through verbatim after trimming and followed
    by <EOU> (user) or <EOR> (system); the window must end with the current
    user utterance.
    """
    if not window:
        raise ValueError("context window is empty")
    if window[-1].role != "user":
        raise ValueError("context window must end with a user utterance")
    parts: list[str] = []
    state_text = serialize_full_state(prev_state, schema)
    if state_text:
        parts.append(state_text)
    parts.append(EOB)
    for utterance in window:
        text = utterance.text.strip()
        if text:
            parts.append(text)
        parts.append(EOU if utterance.role == "user" else EOR)
    return " ".join(parts)


def target_token_count(text: str) -> int:
    """Whitespace token count; the unit every length metric is stated in."""
    return len(text.split())
