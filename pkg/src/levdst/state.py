"""Core data model: schemas, dialogue states, turns, dialogues, goals, config.

A dialogue state is an immutable map from (domain, slot) to a text value.
An absent key means the slot is unset; no entry ever holds empty text.
Values are normalized on construction: lowercased, whitespace collapsed to
single spaces, trimmed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple

from .tokens import is_reserved_name

DONTCARE = "dontcare"

# Slots that parameterize a booking rather than select an entity. Used as the
# default booking-slot classification when a schema does not list its own.
DEFAULT_BOOKING_SLOT_NAMES = ("people", "day", "stay", "time")


class SchemaMismatchError(ValueError):
    """A domain or slot does not exist in the active schema."""


def normalize_value(text: str) -> str:
    """Lowercase, trim, and collapse runs of whitespace to single spaces."""
    return " ".join(text.split()).lower()


def _check_name(kind: str, name: str) -> None:
    if not name or len(name.split()) != 1 or name != name.strip():
        raise ValueError(f"{kind} name must be a single whitespace-free token: {name!r}")
    if is_reserved_name(name):
        raise ValueError(f"{kind} name collides with a grammar token: {name!r}")


@dataclass(frozen=True)
class Schema:
    """Ordered domains and per-domain ordered slots.

    The declared order is the canonical serialization order. ``slots`` holds
    the tracked slots (the universe diffs and states range over);
    ``requestables`` holds slots a user may ask about but that are never
    tracked; ``booking_slots`` marks which tracked slots parameterize a
    booking instead of constraining entity search.
    """

    domains: tuple[str, ...]
    slots: Mapping[str, tuple[str, ...]]
    requestables: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    booking_slots: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self) -> None:
        domains = tuple(self.domains)
        if len(set(domains)) != len(domains):
            raise ValueError("duplicate domain names")
        for d in domains:
            _check_name("domain", d)
        slots = {d: tuple(v) for d, v in dict(self.slots).items()}
        for d in slots:
            if d not in domains:
                raise ValueError(f"slot list for unknown domain: {d!r}")
        for d in domains:
            ordered = slots.setdefault(d, ())
            if len(set(ordered)) != len(ordered):
                raise ValueError(f"duplicate slot names in domain {d!r}")
            for s in ordered:
                _check_name("slot", s)
        requestables = {d: tuple(v) for d, v in dict(self.requestables).items()}
        for d, names in requestables.items():
            if d not in domains:
                raise ValueError(f"requestables for unknown domain: {d!r}")
            for s in names:
                _check_name("requestable", s)
        if self.booking_slots is None:
            booking = {
                d: tuple(s for s in slots[d] if s in DEFAULT_BOOKING_SLOT_NAMES)
                for d in domains
            }
        else:
            booking = {d: tuple(v) for d, v in dict(self.booking_slots).items()}
            for d, names in booking.items():
                if d not in domains:
                    raise ValueError(f"booking slots for unknown domain: {d!r}")
                for s in names:
                    if s not in slots[d]:
                        raise ValueError(f"booking slot {s!r} is not a tracked slot of {d!r}")
            for d in domains:
                booking.setdefault(d, ())
        object.__setattr__(self, "domains", domains)
        object.__setattr__(self, "slots", MappingProxyType(slots))
        object.__setattr__(self, "requestables", MappingProxyType(requestables))
        object.__setattr__(self, "booking_slots", MappingProxyType(booking))
        object.__setattr__(self, "_slot_sets", {d: frozenset(slots[d]) for d in domains})
        object.__setattr__(
            self, "_slot_index", {d: {s: i for i, s in enumerate(slots[d])} for d in domains}
        )
        object.__setattr__(self, "_domain_index", {d: i for i, d in enumerate(domains)})

    def has_domain(self, domain: str) -> bool:
        return domain in self._domain_index  # type: ignore[attr-defined]

    def has_slot(self, domain: str, slot: str) -> bool:
        slot_sets: dict[str, frozenset[str]] = self._slot_sets  # type: ignore[attr-defined]
        return domain in slot_sets and slot in slot_sets[domain]

    def slots_of(self, domain: str) -> tuple[str, ...]:
        if not self.has_domain(domain):
            raise SchemaMismatchError(f"unknown domain: {domain!r}")
        return self.slots[domain]

    def slot_set(self, domain: str) -> frozenset[str]:
        return self._slot_sets[domain]  # type: ignore[attr-defined]

    def requestables_of(self, domain: str) -> tuple[str, ...]:
        return self.requestables.get(domain, ())

    def booking_slots_of(self, domain: str) -> tuple[str, ...]:
        if not self.has_domain(domain):
            raise SchemaMismatchError(f"unknown domain: {domain!r}")
        return self.booking_slots[domain]

    def check_key(self, domain: str, slot: str) -> None:
        if not self.has_domain(domain):
            raise SchemaMismatchError(f"unknown domain: {domain!r}")
        if not self.has_slot(domain, slot):
            raise SchemaMismatchError(f"unknown slot: {domain!r}/{slot!r}")


StateKey = tuple[str, str]


class DialogueState:
    """Immutable map from (domain, slot) keys to normalized text values."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[StateKey, str] | Iterable[tuple[StateKey, str]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        store: dict[StateKey, str] = {}
        for (domain, slot), value in items:
            norm = normalize_value(value)
            if not norm:
                raise ValueError(f"empty value for {domain!r}/{slot!r}; drop the key instead")
            store[(domain, slot)] = norm
        self._entries = store

    @classmethod
    def _from_normalized(cls, entries: dict[StateKey, str]) -> "DialogueState":
        # Internal fast path: caller guarantees values are already normalized
        # and non-empty.
        state = cls.__new__(cls)
        state._entries = entries
        return state

    @property
    def entries(self) -> Mapping[StateKey, str]:
        return MappingProxyType(self._entries)

    def get(self, domain: str, slot: str) -> str | None:
        return self._entries.get((domain, slot))

    def domains(self) -> frozenset[str]:
        return frozenset(d for d, _ in self._entries)

    def domain_items(self, domain: str) -> tuple[tuple[str, str], ...]:
        return tuple((s, v) for (d, s), v in self._entries.items() if d == domain)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[StateKey]:
        return iter(self._entries)

    def __contains__(self, key: object) -> bool:
        return key in self._entries

    def __eq__(self, other: object) -> bool:
        if isinstance(other, DialogueState):
            return self._entries == other._entries
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{d}/{s}={v!r}" for (d, s), v in sorted(self._entries.items()))
        return f"DialogueState({body})"


class BookingOutcome(enum.Enum):
    NONE = "none"
    FAIL = "fail"
    SUCCESS = "success"


@dataclass(frozen=True)
class Goal:
    """What the user set out to achieve in one dialogue."""

    constraints: DialogueState = field(default_factory=DialogueState)
    requestables: Mapping[str, frozenset[str]] = field(default_factory=dict)
    booking_required: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "requestables",
            MappingProxyType({d: frozenset(v) for d, v in dict(self.requestables).items()}),
        )
        object.__setattr__(self, "booking_required", frozenset(self.booking_required))


@dataclass(frozen=True)
class Turn:
    """One user/system exchange with its gold annotations."""

    user_utterance: str
    gold_delex_response: str
    gold_state: DialogueState
    gold_book_outcome: BookingOutcome | None = None


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Turn, ...]
    goal: Goal = field(default_factory=Goal)

    def __post_init__(self) -> None:
        object.__setattr__(self, "turns", tuple(self.turns))
        if not self.turns:
            raise ValueError(f"dialogue {self.id!r} has no turns")


@dataclass(frozen=True)
class PipelineConfig:
    """Run-wide knobs: context window size, match-count bands, seed.

    ``thresholds`` maps a domain to its (T1, T2) match-count band edges;
    domains not listed fall back to ``default_thresholds``.
    """

    context_window: int = 2
    thresholds: Mapping[str, tuple[int, int]] = field(
        default_factory=lambda: {"train": (1, 3)}
    )
    default_thresholds: tuple[int, int] = (5, 10)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.context_window < 1:
            raise ValueError("context_window must be positive")
        thresholds = {d: (int(a), int(b)) for d, (a, b) in dict(self.thresholds).items()}
        for d, (t1, t2) in list(thresholds.items()) + [("", self.default_thresholds)]:
            if t1 < 1 or t2 < 1:
                raise ValueError(f"thresholds must be positive: {d!r} {(t1, t2)}")
            if not t1 < t2:
                raise ValueError(f"T1 must be below T2: {d!r} {(t1, t2)}")
        object.__setattr__(self, "thresholds", MappingProxyType(thresholds))
        object.__setattr__(
            self, "default_thresholds", (int(self.default_thresholds[0]), int(self.default_thresholds[1]))
        )

    def thresholds_for(self, domain: str) -> tuple[int, int]:
        return self.thresholds.get(domain, self.default_thresholds)


@dataclass(frozen=True)
class ValidationResult:
    offending: tuple[StateKey, ...]

    @property
    def ok(self) -> bool:
        return not self.offending


def validate_state(state: DialogueState, schema: Schema) -> ValidationResult:
    """Check every key of ``state`` against ``schema``; never raises."""
    bad = tuple(
        key for key in sorted(state.entries) if not schema.has_slot(key[0], key[1])
    )
    return ValidationResult(offending=bad)


class Utterance(NamedTuple):
    role: str  # "user" or "system"
    text: str


USER = "user"
SYSTEM = "system"


def build_window(
    user_texts: list[str], system_texts: list[str], t: int, w: int
) -> list[Utterance]:
    """Window of the last w exchanges plus the current user utterance.

    Turns are 1-based. The window is [U_{t-w}, R_{t-w}, ..., R_{t-1}, U_t],
    truncated at the start of the dialogue, so it holds 2w+1 utterances
    once t > w and 2t-1 before that.
    """
    if w < 1:
        raise ValueError("window size must be positive")
    if t < 1 or t > len(user_texts):
        raise IndexError(f"turn {t} out of range for {len(user_texts)} turns")
    if len(system_texts) < t - 1:
        raise IndexError(f"need {t - 1} system turns, have {len(system_texts)}")
    window: list[Utterance] = []
    for i in range(max(1, t - w), t):
        window.append(Utterance(USER, user_texts[i - 1]))
        window.append(Utterance(SYSTEM, system_texts[i - 1]))
    window.append(Utterance(USER, user_texts[t - 1]))
    return window


def context_window(dialogue: Dialogue, t: int, w: int) -> list[Utterance]:
    """Gold-history context window for turn t of a dialogue."""
    users = [turn.user_utterance for turn in dialogue.turns]
    systems = [turn.gold_delex_response for turn in dialogue.turns]
    return build_window(users, systems, t, w)
