"""Entity tables, constraint queries, booking, and KB-state categories.

The response generator never sees raw query results, only one of fifteen
categories crossing the booking outcome (none / fail / success) with a
banded match count (no query ran / zero / at most T1 / at most T2 / more),
where (T1, T2) come from the per-domain config thresholds.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .state import (
    DONTCARE,
    BookingOutcome,
    DialogueState,
    PipelineConfig,
    Schema,
    SchemaMismatchError,
    Turn,
    normalize_value,
)
from .tokens import kb_token


class KbLoadError(ValueError):
    """Malformed KB file or a record violating the schema."""


Record = Mapping[str, str]


@dataclass(frozen=True)
class KnowledgeBase:
    """Per-domain entity tables in stable file order, tied to a schema."""

    schema: Schema
    tables: Mapping[str, tuple[Record, ...]]

    def has_table(self, domain: str) -> bool:
        return domain in self.tables

    def table(self, domain: str) -> tuple[Record, ...]:
        return self.tables[domain]


def _check_record(domain: str, index: int, raw: object, schema: Schema, origin: str) -> Record:
    if not isinstance(raw, dict):
        raise KbLoadError(f"{origin}: record {index} is not an object")
    allowed = set(schema.slots_of(domain)) | set(schema.requestables_of(domain)) | {"name", "id"}
    record: dict[str, str] = {}
    for key, value in raw.items():
        if not isinstance(key, str) or not isinstance(value, str):
            raise KbLoadError(f"{origin}: record {index} has a non-text key or value")
        if key not in allowed:
            raise KbLoadError(f"{origin}: record {index} has unknown field {key!r}")
        record[key] = normalize_value(value)
    if "name" not in record and "id" not in record:
        raise KbLoadError(f"{origin}: record {index} lacks a name or id")
    return record


def load_kb(path: str | Path, schema: Schema) -> KnowledgeBase:
    """Load one <domain>.json table per file from a directory.

    Each file holds a JSON array of records with text keys and values; every
    record needs a unique name or id, and every field must be a tracked or
    requestable slot of its domain (or the identity fields themselves).
    """
    root = Path(path)
    if not root.is_dir():
        raise KbLoadError(f"not a KB directory: {root}")
    tables: dict[str, tuple[Record, ...]] = {}
    for file in sorted(root.glob("*.json")):
        domain = file.stem
        if not schema.has_domain(domain):
            raise KbLoadError(f"{file}: no such domain in the schema")
        try:
            data = json.loads(file.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise KbLoadError(f"{file}: invalid JSON: {exc}") from exc
        if not isinstance(data, list):
            raise KbLoadError(f"{file}: expected a top-level array of records")
        records = tuple(
            _check_record(domain, i, raw, schema, str(file)) for i, raw in enumerate(data)
        )
        identities = [r.get("id") or r.get("name") for r in records]
        if len(set(identities)) != len(identities):
            raise KbLoadError(f"{file}: duplicate entity identity")
        tables[domain] = records
    return KnowledgeBase(schema=schema, tables=tables)


def dump_kb(kb: KnowledgeBase, path: str | Path) -> None:
    """Write one <domain>.json per table; inverse of load_kb modulo key order."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for domain, records in kb.tables.items():
        payload = json.dumps([dict(r) for r in records], indent=2, sort_keys=True)
        (root / f"{domain}.json").write_text(payload + "\n", encoding="utf-8")


def query(kb: KnowledgeBase, state: DialogueState, domain: str) -> tuple[Record, ...]:
    """Entities matching every non-booking constraint of ``state`` exactly.

    A value of 'dontcare' is no constraint at all; with no constraints the
    whole table comes back in stable order.
    """
    if not kb.schema.has_domain(domain):
        raise SchemaMismatchError(f"unknown domain: {domain!r}")
    if domain not in kb.tables:
        raise KeyError(f"no KB table for domain {domain!r}")
    booking = set(kb.schema.booking_slots_of(domain))
    constraints = [
        (slot, value)
        for (d, slot), value in state.entries.items()
        if d == domain and slot not in booking and value != DONTCARE
    ]
    return tuple(
        record
        for record in kb.tables[domain]
        if all(record.get(slot) == value for slot, value in constraints)
    )


class KbState(enum.Enum):
    KB1 = 1
    KB2 = 2
    KB3 = 3
    KB4 = 4
    KB5 = 5
    KB6 = 6
    KB7 = 7
    KB8 = 8
    KB9 = 9
    KB10 = 10
    KB11 = 11
    KB12 = 12
    KB13 = 13
    KB14 = 14
    KB15 = 15

    @property
    def token(self) -> str:
        return kb_token(self.value)


_BOOKING_BASE = {
    BookingOutcome.NONE: 0,
    BookingOutcome.FAIL: 5,
    BookingOutcome.SUCCESS: 10,
}


def categorize_kb_state(
    match_count: int | None,
    booking: BookingOutcome,
    domain: str,
    cfg: PipelineConfig,
) -> KbState:
    """Map (match count, booking outcome) to one of the fifteen categories.

    ``match_count`` of None means no query ran this turn. The five bands are
    disjoint: none, 0, 1..T1, T1+1..T2, above T2.
    """
    if match_count is not None and match_count < 0:
        raise ValueError("match_count cannot be negative")
    t1, t2 = cfg.thresholds_for(domain)
    if match_count is None:
        band = 0
    elif match_count == 0:
        band = 1
    elif match_count <= t1:
        band = 2
    elif match_count <= t2:
        band = 3
    else:
        band = 4
    return KbState(_BOOKING_BASE[booking] + band + 1)


_BOOK_FAIL_MOD = 4  # three in four simulated bookings succeed


def attempt_booking(
    turn: Turn | None,
    state: DialogueState,
    domain: str,
    schema: Schema,
    cfg: PipelineConfig,
    dialogue_id: str = "",
) -> BookingOutcome:
    """Booking outcome for one turn.

    Priority: the turn's gold annotation when present; otherwise 'none'
    unless the state carries at least one of the domain's booking slots;
    otherwise a deterministic pseudo-random outcome hashed from
    (rng_seed, dialogue id, domain, booking slot values).
    """
    if turn is not None and turn.gold_book_outcome is not None:
        return turn.gold_book_outcome
    booked = [
        (slot, state.get(domain, slot))
        for slot in schema.booking_slots_of(domain)
        if state.get(domain, slot) is not None
    ]
    if not booked:
        return BookingOutcome.NONE
    material = f"book:{cfg.rng_seed}:{dialogue_id}:{domain}:" + ";".join(
        f"{slot}={value}" for slot, value in booked
    )
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    draw = int.from_bytes(digest[:8], "big")
    return BookingOutcome.FAIL if draw % _BOOK_FAIL_MOD == 0 else BookingOutcome.SUCCESS


_REFERENCE_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"


def booking_reference(seed: int, *parts: str) -> str:
    """Eight uppercase alphanumerics, bit-exact for identical inputs."""
    material = f"ref:{seed}:" + ":".join(parts)
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    number = int.from_bytes(digest[:10], "big")
    chars = []
    for _ in range(8):
        number, rem = divmod(number, len(_REFERENCE_ALPHABET))
        chars.append(_REFERENCE_ALPHABET[rem])
    return "".join(chars)


_PLACEHOLDER_RE = re.compile(r"\[value_([a-z0-9_]+)\]")


def lexicalize(
    delex_response: str,
    entities: Sequence[Record],
    state: DialogueState,
    seed: int = 0,
) -> str:
    """Fill [value_*] placeholders in a delexicalized response.

    [value_choice] becomes the match count, [value_reference] a deterministic
    booking reference, any other placeholder the first entity's field of that
    name, falling back to a state value with that slot name. Whatever cannot
    be resolved stays verbatim. Nothing outside placeholders is touched.
    """
    state_items = sorted(state.entries.items())

    def resolve(match: re.Match[str]) -> str:
        key = match.group(1)
        if key == "choice":
            return str(len(entities))
        if key == "reference":
            flat = [f"{d}.{s}={v}" for (d, s), v in state_items]
            return booking_reference(seed, *flat)
        if entities:
            value = entities[0].get(key)
            if value is not None:
                return value
        for (_, slot), value in state_items:
            if slot == key:
                return value
        return match.group(0)

    return _PLACEHOLDER_RE.sub(resolve, delex_response)
