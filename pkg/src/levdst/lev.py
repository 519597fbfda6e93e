"""Slot-level diff and patch between consecutive dialogue states.

A span is the minimal edit script turning the previous state into the next
one: one block per changed domain, one edit per changed slot. Deletions are
carried by a dedicated marker object so that a literal value "null" can never
be mistaken for a deletion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple, Union

from .state import DialogueState, Schema, SchemaMismatchError, StateKey, normalize_value


class EditKind(enum.Enum):
    INSERT = "insert"
    DELETE = "delete"
    SUBSTITUTE = "substitute"


class _DeleteMarker:
    __slots__ = ()

    def __repr__(self) -> str:
        return "DELETE"


DELETE = _DeleteMarker()

EditValue = Union[str, _DeleteMarker]


class SlotEdit(NamedTuple):
    slot: str
    new_value: EditValue


Block = tuple[str, tuple[SlotEdit, ...]]


@dataclass(frozen=True)
class LevSpan:
    """Ordered edit blocks, one per domain, in schema-canonical order."""

    blocks: tuple[Block, ...] = ()

    def __post_init__(self) -> None:
        blocks = tuple((d, tuple(edits)) for d, edits in self.blocks)
        seen_domains = set()
        for domain, edits in blocks:
            if domain in seen_domains:
                raise ValueError(f"domain appears twice: {domain!r}")
            seen_domains.add(domain)
            if not edits:
                raise ValueError(f"empty block for domain {domain!r}")
            slots = [e.slot for e in edits]
            if len(set(slots)) != len(slots):
                raise ValueError(f"slot edited twice in {domain!r}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def is_empty(self) -> bool:
        return not self.blocks

    def edits(self) -> Iterator[tuple[str, SlotEdit]]:
        for domain, block_edits in self.blocks:
            for edit in block_edits:
                yield domain, edit

    @classmethod
    def from_edits(
        cls, edits: Mapping[StateKey, EditValue], schema: Schema
    ) -> "LevSpan":
        """Canonicalize a key->value edit map into ordered blocks."""
        for domain, slot in edits:
            schema.check_key(domain, slot)
        blocks: list[Block] = []
        for domain in schema.domains:
            block = tuple(
                SlotEdit(slot, edits[(domain, slot)])
                for slot in schema.slots_of(domain)
                if (domain, slot) in edits
            )
            if block:
                blocks.append((domain, block))
        return cls(blocks=tuple(blocks))


def classify_edit(
    prev: DialogueState, nxt: DialogueState, key: StateKey, schema: Schema
) -> EditKind | None:
    """Kind of change at one key, or None when the key is untouched."""
    schema.check_key(*key)
    before = prev.get(*key)
    after = nxt.get(*key)
    if before is None and after is not None:
        return EditKind.INSERT
    if before is not None and after is None:
        return EditKind.DELETE
    if before != after:
        return EditKind.SUBSTITUTE
    return None


def _check_state(state: DialogueState, schema: Schema, label: str) -> None:
    for domain, slot in state.entries:
        if not schema.has_slot(domain, slot):
            raise SchemaMismatchError(f"{label} state has unknown key {domain!r}/{slot!r}")


def compute_lev(prev: DialogueState, nxt: DialogueState, schema: Schema) -> LevSpan:
    """Minimal edit script turning ``prev`` into ``nxt``."""
    _check_state(prev, schema, "previous")
    _check_state(nxt, schema, "next")
    pe = prev.entries
    ne = nxt.entries
    edits: dict[StateKey, EditValue] = {}
    for key in pe.keys() - ne.keys():
        edits[key] = DELETE
    for key, value in ne.items():
        if pe.get(key) != value:
            edits[key] = value
    return LevSpan.from_edits(edits, schema)


def apply_lev(prev: DialogueState, lev: LevSpan, schema: Schema) -> DialogueState:
    """Patch ``prev`` with ``lev``: deletions remove keys, values upsert.

    Deleting an already absent key is a no-op, so replaying a span is
    idempotent. Unknown domains or slots in the span are an error.
    """
    _check_state(prev, schema, "previous")
    entries = dict(prev.entries)
    for domain, (slot, value) in lev.edits():
        schema.check_key(domain, slot)
        if value is DELETE:
            entries.pop((domain, slot), None)
        else:
            norm = normalize_value(value)  # type: ignore[arg-type]
            if not norm:
                raise ValueError(f"edit for {domain!r}/{slot!r} has empty value")
            entries[(domain, slot)] = norm
    return DialogueState._from_normalized(entries)


def edit_count(lev: LevSpan) -> int:
    return sum(len(edits) for _, edits in lev.blocks)
