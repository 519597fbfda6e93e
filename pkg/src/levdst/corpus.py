"""Corpus file format, validation, and deterministic subsampling.

A corpus is one UTF-8 JSON document:

    {
      "schema": {
        "domains": ["hotel", ...],
        "slots": {"hotel": ["stars", ...], ...},
        "requestables": {"hotel": ["phone", ...], ...},   # optional
        "booking_slots": {"hotel": ["people", ...], ...}  # optional
      },
      "dialogues": [
        {
          "id": "fx001",
          "goal": {
            "constraints": [["hotel", "stars", "5"], ...],
            "requestables": {"hotel": ["phone"]},
            "booking": ["hotel"]
          },
          "turns": [
            {"user": "...", "response": "...",
             "state": [["hotel", "stars", "5"], ...],
             "book": "success"}                            # book optional
          ]
        }
      ]
    }

Turns alternate strictly user/system starting with the user; each turn
object carries both sides of one exchange. States are stored whole per
turn; edit spans are always derived by diffing, never stored.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .state import (
    BookingOutcome,
    Dialogue,
    DialogueState,
    Goal,
    Schema,
    Turn,
    validate_state,
)


class CorpusFormatError(ValueError):
    """Structurally invalid corpus document, with position context."""


@dataclass(frozen=True)
class Corpus:
    schema: Schema
    dialogues: tuple[Dialogue, ...]

    def turn_count(self) -> int:
        return sum(len(d.turns) for d in self.dialogues)


def _triples_to_state(raw: object, where: str) -> DialogueState:
    if not isinstance(raw, list):
        raise CorpusFormatError(f"{where}: state must be an array of [domain, slot, value]")
    entries = {}
    for i, triple in enumerate(raw):
        if (
            not isinstance(triple, list)
            or len(triple) != 3
            or not all(isinstance(x, str) for x in triple)
        ):
            raise CorpusFormatError(f"{where}: state entry {i} is not a text triple")
        domain, slot, value = triple
        entries[(domain, slot)] = value
    try:
        return DialogueState(entries)
    except ValueError as exc:
        raise CorpusFormatError(f"{where}: {exc}") from exc


def state_to_triples(state: DialogueState, schema: Schema) -> list[list[str]]:
    triples = []
    for domain in schema.domains:
        for slot in schema.slots_of(domain):
            value = state.get(domain, slot)
            if value is not None:
                triples.append([domain, slot, value])
    return triples


def load_schema_dict(raw: object, where: str = "schema") -> Schema:
    if not isinstance(raw, dict):
        raise CorpusFormatError(f"{where}: expected an object")
    try:
        return Schema(
            domains=tuple(raw.get("domains", ())),
            slots={d: tuple(v) for d, v in raw.get("slots", {}).items()},
            requestables={d: tuple(v) for d, v in raw.get("requestables", {}).items()},
            booking_slots=(
                {d: tuple(v) for d, v in raw["booking_slots"].items()}
                if "booking_slots" in raw
                else None
            ),
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise CorpusFormatError(f"{where}: {exc}") from exc


def schema_to_dict(schema: Schema) -> dict:
    return {
        "domains": list(schema.domains),
        "slots": {d: list(schema.slots_of(d)) for d in schema.domains},
        "requestables": {
            d: list(schema.requestables_of(d))
            for d in schema.domains
            if schema.requestables_of(d)
        },
        "booking_slots": {d: list(schema.booking_slots_of(d)) for d in schema.domains},
    }


def _load_goal(raw: object, schema: Schema, where: str) -> Goal:
    if raw is None:
        return Goal()
    if not isinstance(raw, dict):
        raise CorpusFormatError(f"{where}: goal must be an object")
    constraints = _triples_to_state(raw.get("constraints", []), f"{where} goal constraints")
    bad = validate_state(constraints, schema)
    if not bad.ok:
        raise CorpusFormatError(f"{where}: goal constraint keys unknown: {bad.offending}")
    requestables_raw = raw.get("requestables", {})
    if not isinstance(requestables_raw, dict):
        raise CorpusFormatError(f"{where}: goal requestables must be an object")
    requestables: dict[str, frozenset[str]] = {}
    for domain, slots in requestables_raw.items():
        if not schema.has_domain(domain):
            raise CorpusFormatError(f"{where}: goal requestables for unknown domain {domain!r}")
        known = set(schema.slots_of(domain)) | set(schema.requestables_of(domain))
        for slot in slots:
            if slot not in known:
                raise CorpusFormatError(
                    f"{where}: goal requestable {domain!r}/{slot!r} unknown to the schema"
                )
        requestables[domain] = frozenset(slots)
    booking = raw.get("booking", [])
    for domain in booking:
        if not schema.has_domain(domain):
            raise CorpusFormatError(f"{where}: goal booking for unknown domain {domain!r}")
    return Goal(
        constraints=constraints,
        requestables=requestables,
        booking_required=frozenset(booking),
    )


def _load_turn(raw: object, schema: Schema, where: str) -> Turn:
    if not isinstance(raw, dict):
        raise CorpusFormatError(f"{where}: turn must be an object")
    for field in ("user", "response"):
        if not isinstance(raw.get(field), str):
            raise CorpusFormatError(f"{where}: missing text field {field!r}")
    state = _triples_to_state(raw.get("state", []), where)
    bad = validate_state(state, schema)
    if not bad.ok:
        raise CorpusFormatError(f"{where}: state keys unknown to the schema: {bad.offending}")
    outcome = None
    if "book" in raw:
        try:
            outcome = BookingOutcome(raw["book"])
        except ValueError as exc:
            raise CorpusFormatError(f"{where}: bad book outcome {raw['book']!r}") from exc
    return Turn(
        user_utterance=raw["user"],
        gold_delex_response=raw["response"],
        gold_state=state,
        gold_book_outcome=outcome,
    )


def load_corpus(path: str | Path) -> Corpus:
    """Read and validate a corpus document."""
    source = Path(path)
    try:
        document = json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{source}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(document, dict):
        raise CorpusFormatError(f"{source}: expected a top-level object")
    schema = load_schema_dict(document.get("schema"), f"{source}: schema")
    dialogues_raw = document.get("dialogues")
    if not isinstance(dialogues_raw, list):
        raise CorpusFormatError(f"{source}: missing dialogues array")
    dialogues: list[Dialogue] = []
    seen_ids: set[str] = set()
    for i, raw in enumerate(dialogues_raw):
        if not isinstance(raw, dict) or not isinstance(raw.get("id"), str):
            raise CorpusFormatError(f"{source}: dialogue {i} lacks a text id")
        did = raw["id"]
        if did in seen_ids:
            raise CorpusFormatError(f"{source}: duplicate dialogue id {did!r}")
        seen_ids.add(did)
        where = f"{source}: dialogue {did!r}"
        turns_raw = raw.get("turns")
        if not isinstance(turns_raw, list) or not turns_raw:
            raise CorpusFormatError(f"{where}: needs at least one turn")
        turns = tuple(
            _load_turn(t, schema, f"{where} turn {j + 1}") for j, t in enumerate(turns_raw)
        )
        goal = _load_goal(raw.get("goal"), schema, where)
        dialogues.append(Dialogue(id=did, turns=turns, goal=goal))
    return Corpus(schema=schema, dialogues=tuple(dialogues))


def dump_corpus(corpus: Corpus) -> dict:
    """Plain-JSON form of a corpus; inverse of load_corpus."""
    dialogues = []
    for dialogue in corpus.dialogues:
        turns = []
        for turn in dialogue.turns:
            row: dict = {
                "user": turn.user_utterance,
                "response": turn.gold_delex_response,
                "state": state_to_triples(turn.gold_state, corpus.schema),
            }
            if turn.gold_book_outcome is not None:
                row["book"] = turn.gold_book_outcome.value
            turns.append(row)
        goal = dialogue.goal
        dialogues.append(
            {
                "id": dialogue.id,
                "goal": {
                    "constraints": state_to_triples(goal.constraints, corpus.schema),
                    "requestables": {d: sorted(v) for d, v in goal.requestables.items()},
                    "booking": sorted(goal.booking_required),
                },
                "turns": turns,
            }
        )
    return {"schema": schema_to_dict(corpus.schema), "dialogues": dialogues}


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(dump_corpus(corpus), indent=2) + "\n", encoding="utf-8"
    )


# Low-resource splits: percent of the full training set -> dialogue count.
SAMPLE_PRESETS = {5: 400, 10: 800, 20: 1600}


def subsample(dialogues: Sequence[Dialogue], count: int, seed: int) -> list[Dialogue]:
    """Uniform sample without replacement, preserving relative order."""
    if count < 0 or count > len(dialogues):
        raise ValueError(f"cannot sample {count} of {len(dialogues)} dialogues")
    picked = sorted(random.Random(seed).sample(range(len(dialogues)), count))
    return [dialogues[i] for i in picked]
