import json
import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from levdst import (
    DELETE,
    DialogueState,
    PipelineConfig,
    Schema,
    load_corpus,
    load_kb,
)


def span_edit_dict(span):
    """Flatten a span into {(domain, slot): value-or-None} for comparisons."""
    out = {}
    for domain, edit in span.edits():
        out[(domain, edit.slot)] = None if edit.new_value is DELETE else edit.new_value
    return out

FIXTURES = Path(__file__).parent / "fixtures"
WIRE_SERVER = Path(__file__).parent / "helpers" / "wire_server.py"


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_corpus(FIXTURES / "corpus.json")


@pytest.fixture(scope="session")
def mwoz_schema(fixture_corpus):
    return fixture_corpus.schema


@pytest.fixture(scope="session")
def fixture_kb(fixture_corpus):
    return load_kb(FIXTURES / "kb", fixture_corpus.schema)


@pytest.fixture(scope="session")
def frozen_eval():
    return json.loads((FIXTURES / "frozen_eval.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def scene_corpus():
    # One transcribed multi-domain booking dialogue: restaurant then hotel,
    # failed booking retried with a shorter stay.
    return load_corpus(FIXTURES / "mul0113.json")


@pytest.fixture(scope="session")
def tiny_schema():
    return Schema(
        domains=("alpha", "beta"),
        slots={
            "alpha": ("size", "color", "shape", "grade"),
            "beta": ("tier", "mode", "rank"),
        },
    )


@pytest.fixture
def cfg():
    return PipelineConfig()


@pytest.fixture
def fig2_prev():
    return DialogueState(
        {
            ("hotel", "stars"): "5",
            ("hotel", "area"): "centre",
            ("hotel", "day"): "sunday",
            ("restaurant", "food"): "thai",
            ("restaurant", "area"): "centre",
            ("restaurant", "day"): "sunday",
            ("restaurant", "name"): "bangkok city",
        }
    )


@pytest.fixture
def fig2_next(fig2_prev):
    entries = dict(fig2_prev.entries)
    entries[("hotel", "people")] = "10"
    return DialogueState(entries)


# --- hypothesis strategies -------------------------------------------------
# Value tokens come from a closed pool disjoint from every slot and domain
# name, so random values can never masquerade as grammar tokens.

VALUE_WORDS = ("red", "blue", "green", "tiny", "huge", "round", "deluxe", "basic", "k9", "zz7")


def values():
    single = st.sampled_from(VALUE_WORDS)
    double = st.tuples(single, single).map(" ".join)
    return st.one_of(single, double)


def state_keys(schema):
    return st.sampled_from(
        [(d, s) for d in schema.domains for s in schema.slots_of(d)]
    )


def state_maps(schema, max_size=None):
    keys = [(d, s) for d in schema.domains for s in schema.slots_of(d)]
    return st.dictionaries(
        st.sampled_from(keys), values(), max_size=max_size or len(keys)
    )


def states(schema, max_size=None):
    return state_maps(schema, max_size).map(DialogueState)


def random_state_pair(rng: random.Random, schema, overlap=0.6):
    """Cheap non-hypothesis sampler for the high-volume round-trip runs."""
    keys = [(d, s) for d in schema.domains for s in schema.slots_of(d)]
    prev = {}
    nxt = {}
    for key in keys:
        rolls = rng.random(), rng.random(), rng.random()
        value = VALUE_WORDS[rng.randrange(len(VALUE_WORDS))]
        if rolls[0] < 0.5:
            prev[key] = value
        if rolls[1] < 0.5:
            if rolls[2] < overlap and key in prev:
                nxt[key] = prev[key]
            else:
                nxt[key] = VALUE_WORDS[rng.randrange(len(VALUE_WORDS))]
    return prev, nxt
