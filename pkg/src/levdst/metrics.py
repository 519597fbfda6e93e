"""Corpus-level evaluation: joint goal accuracy, inform/success, BLEU.

Inform asks whether, for every goal domain that needs an entity, the set of
entities consistent with the tracked state at the latest entity-offer turn
intersects the set consistent with the goal constraints. Success further
requires every requested slot's placeholder to show up in a response of a
turn where its domain is active. Both are percentages over dialogues.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from .kb import KnowledgeBase, Record, query
from .state import DialogueState, Dialogue

ENTITY_PLACEHOLDERS = ("[value_name]", "[value_id]")


@dataclass(frozen=True)
class DstReport:
    joint_accuracy: float
    turn_matches: tuple[bool, ...]


def joint_goal_accuracy(
    predicted: Sequence[DialogueState], gold: Sequence[DialogueState]
) -> DstReport:
    """Fraction of turns whose full predicted state equals the gold state."""
    if len(predicted) != len(gold):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(gold)} gold")
    matches = tuple(p == g for p, g in zip(predicted, gold))
    accuracy = sum(matches) / len(matches) if matches else 0.0
    return DstReport(joint_accuracy=accuracy, turn_matches=matches)


class MissingKbError(ValueError):
    """A goal demands entity attributes for a domain with no KB table."""


def _domain_entries(state: DialogueState, domain: str) -> dict[str, str]:
    return {s: v for (d, s), v in state.entries.items() if d == domain}


def active_domains_per_turn(states: Sequence[DialogueState]) -> list[frozenset[str]]:
    """Domains each turn is about: the ones whose entries changed, inherited
    from the previous turn when nothing changed."""
    out: list[frozenset[str]] = []
    prev = DialogueState()
    previous_active: frozenset[str] = frozenset()
    for state in states:
        touched = {
            d
            for d in prev.domains() | state.domains()
            if _domain_entries(prev, d) != _domain_entries(state, d)
        }
        active = frozenset(touched) or previous_active or state.domains()
        out.append(active)
        prev = state
        previous_active = active
    return out


def _identity(record: Record) -> str:
    return record.get("id") or record.get("name") or ""


def _evaluate_dialogue(
    dialogue: Dialogue,
    responses: Sequence[str],
    states: Sequence[DialogueState],
    kb: KnowledgeBase,
) -> tuple[bool, bool]:
    goal = dialogue.goal
    active = active_domains_per_turn(states)
    constrained = sorted(goal.constraints.domains())

    informed = True
    for domain in constrained:
        if not kb.has_table(domain):
            wants_entity = {"name", "id"} & set(goal.requestables.get(domain, ()))
            if wants_entity:
                raise MissingKbError(
                    f"dialogue {dialogue.id!r}: goal requests {sorted(wants_entity)} "
                    f"for {domain!r} but the KB has no table for it"
                )
            continue
        offers = [
            t
            for t in range(len(responses))
            if domain in active[t]
            and any(p in responses[t] for p in ENTITY_PLACEHOLDERS)
        ]
        if not offers:
            informed = False
            continue
        latest = offers[-1]
        offered = {_identity(r) for r in query(kb, states[latest], domain)}
        wanted = {_identity(r) for r in query(kb, goal.constraints, domain)}
        if not offered & wanted:
            informed = False

    succeeded = informed
    if succeeded:
        for domain, slots in goal.requestables.items():
            for slot in slots:
                placeholder = f"[value_{slot}]"
                hit = any(
                    domain in active[t] and placeholder in responses[t]
                    for t in range(len(responses))
                )
                if not hit:
                    succeeded = False
    return informed, succeeded


def inform_success(
    dialogues: Sequence[Dialogue],
    responses_per_dialogue: Sequence[Sequence[str]],
    states_per_dialogue: Sequence[Sequence[DialogueState]],
    kb: KnowledgeBase,
) -> tuple[float, float]:
    """Inform and Success rates as percentages over dialogues."""
    if not (len(dialogues) == len(responses_per_dialogue) == len(states_per_dialogue)):
        raise ValueError("dialogues, responses, and states must align")
    if not dialogues:
        return 0.0, 0.0
    informed = succeeded = 0
    for dialogue, responses, states in zip(
        dialogues, responses_per_dialogue, states_per_dialogue
    ):
        if not (len(responses) == len(states) == len(dialogue.turns)):
            raise ValueError(f"dialogue {dialogue.id!r}: per-turn outputs misaligned")
        inf, suc = _evaluate_dialogue(dialogue, responses, states, kb)
        informed += inf
        succeeded += suc
    n = len(dialogues)
    return 100.0 * informed / n, 100.0 * succeeded / n


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(candidates: Sequence[str], references: Sequence[str]) -> float:
    """Corpus-level BLEU-4 on whitespace tokens, one reference per candidate.

    Clipped n-gram counts aggregate over the corpus before the geometric
    mean; brevity penalty exp(1 - r/c) applies when the candidate side is
    shorter. No smoothing: any zero aggregate precision zeroes the score.
    Scale is 0..100.
    """
    if len(candidates) != len(references):
        raise ValueError("candidates and references must align")
    clipped = [0, 0, 0, 0]
    total = [0, 0, 0, 0]
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        ct = cand.split()
        rt = ref.split()
        cand_len += len(ct)
        ref_len += len(rt)
        for n in range(1, 5):
            counts = _ngrams(ct, n)
            if not counts:
                continue
            ref_counts = _ngrams(rt, n)
            total[n - 1] += sum(counts.values())
            clipped[n - 1] += sum(min(c, ref_counts[g]) for g, c in counts.items())
    if any(t == 0 for t in total) or any(c == 0 for c in clipped):
        return 0.0
    log_precision = math.fsum(0.25 * math.log(c / t) for c, t in zip(clipped, total))
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(log_precision) * 100.0


def combined_score(inform: float, success: float, bleu: float) -> float:
    """(Inform + Success) x 0.5 + BLEU, rounded to two decimals."""
    return round((inform + success) * 0.5 + bleu, 2)


REPORT_FIELDS = ("joint_acc", "inform", "success", "bleu", "combined", "not", "latency_ms")


def report_json(values: Mapping[str, float]) -> str:
    """Machine-readable report line with fields in canonical order."""
    unknown = set(values) - set(REPORT_FIELDS)
    if unknown:
        raise ValueError(f"unknown report fields: {sorted(unknown)}")
    ordered = {field: values[field] for field in REPORT_FIELDS if field in values}
    return json.dumps(ordered)


def report_table(values: Mapping[str, float]) -> str:
    """Human-readable two-column table for the same fields."""
    rows = [(field, values[field]) for field in REPORT_FIELDS if field in values]
    width = max(len(name) for name, _ in rows) if rows else 0
    lines = [f"{name.ljust(width)}  {value:.4f}" for name, value in rows]
    return "\n".join(lines)
