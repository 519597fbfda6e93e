"""Corpus document loading, validation errors, and subsampling."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levdst import (
    BookingOutcome,
    Corpus,
    CorpusFormatError,
    Dialogue,
    SAMPLE_PRESETS,
    Turn,
    dump_corpus,
    load_corpus,
    load_schema_dict,
    save_corpus,
    schema_to_dict,
    state_to_triples,
    subsample,
)

from conftest import FIXTURES


def write_doc(tmp_path, doc):
    path = tmp_path / "corpus.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def minimal_doc(**overrides):
    doc = {
        "schema": {
            "domains": ["hotel"],
            "slots": {"hotel": ["area", "people"]},
            "requestables": {"hotel": ["phone"]},
            "booking_slots": {"hotel": ["people"]},
        },
        "dialogues": [
            {
                "id": "d1",
                "goal": {
                    "constraints": [["hotel", "area", "north"]],
                    "requestables": {"hotel": ["phone"]},
                    "booking": ["hotel"],
                },
                "turns": [
                    {
                        "user": "need a hotel",
                        "response": "where ?",
                        "state": [["hotel", "area", "north"]],
                        "book": "none",
                    }
                ],
            }
        ],
    }
    doc.update(overrides)
    return doc


# --- loading -----------------------------------------------------------------


def test_load_fixture_corpus(fixture_corpus):
    assert len(fixture_corpus.dialogues) == 25
    assert fixture_corpus.turn_count() == 144
    ids = [d.id for d in fixture_corpus.dialogues]
    assert len(set(ids)) == len(ids)
    assert fixture_corpus.schema.domains == ("hotel", "restaurant", "train", "attraction")


def test_load_minimal_document(tmp_path):
    corpus = load_corpus(write_doc(tmp_path, minimal_doc()))
    (dialogue,) = corpus.dialogues
    assert dialogue.id == "d1"
    assert dialogue.goal.requestables == {"hotel": frozenset({"phone"})}
    assert dialogue.goal.booking_required == frozenset({"hotel"})
    (turn,) = dialogue.turns
    assert turn.gold_book_outcome is BookingOutcome.NONE
    assert turn.gold_state.get("hotel", "area") == "north"


def test_goal_and_book_are_optional(tmp_path):
    doc = minimal_doc()
    del doc["dialogues"][0]["goal"]
    del doc["dialogues"][0]["turns"][0]["book"]
    corpus = load_corpus(write_doc(tmp_path, doc))
    (dialogue,) = corpus.dialogues
    assert dialogue.goal.constraints.entries == {}
    assert dialogue.turns[0].gold_book_outcome is None


def test_values_are_normalized_on_load(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["turns"][0]["state"] = [["hotel", "area", "  North  East "]]
    corpus = load_corpus(write_doc(tmp_path, doc))
    assert corpus.dialogues[0].turns[0].gold_state.get("hotel", "area") == "north east"


# --- load failures -----------------------------------------------------------


def reject(tmp_path, doc, fragment):
    with pytest.raises(CorpusFormatError, match=fragment):
        load_corpus(write_doc(tmp_path, doc))


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "corpus.json"
    path.write_text('{\n "schema": {,}\n}', encoding="utf-8")
    with pytest.raises(CorpusFormatError, match="line 2"):
        load_corpus(path)


def test_top_level_must_be_object(tmp_path):
    path = tmp_path / "corpus.json"
    path.write_text("[]", encoding="utf-8")
    with pytest.raises(CorpusFormatError, match="top-level object"):
        load_corpus(path)


def test_missing_dialogues_array(tmp_path):
    doc = minimal_doc()
    del doc["dialogues"]
    reject(tmp_path, doc, "dialogues array")


def test_duplicate_dialogue_ids(tmp_path):
    doc = minimal_doc()
    doc["dialogues"].append(json.loads(json.dumps(doc["dialogues"][0])))
    reject(tmp_path, doc, "duplicate dialogue id 'd1'")


def test_dialogue_without_id(tmp_path):
    doc = minimal_doc()
    del doc["dialogues"][0]["id"]
    reject(tmp_path, doc, "dialogue 0 lacks a text id")


def test_dialogue_without_turns(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["turns"] = []
    reject(tmp_path, doc, "at least one turn")


def test_turn_missing_response(tmp_path):
    doc = minimal_doc()
    del doc["dialogues"][0]["turns"][0]["response"]
    reject(tmp_path, doc, "turn 1.*'response'")


def test_bad_state_triple(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["turns"][0]["state"] = [["hotel", "area"]]
    reject(tmp_path, doc, "entry 0 is not a text triple")


def test_state_key_unknown_to_schema(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["turns"][0]["state"] = [["hotel", "bogus", "x"]]
    reject(tmp_path, doc, "unknown to the schema")


def test_empty_state_value(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["turns"][0]["state"] = [["hotel", "area", "   "]]
    reject(tmp_path, doc, "empty value")


def test_bad_book_outcome(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["turns"][0]["book"] = "maybe"
    reject(tmp_path, doc, "bad book outcome 'maybe'")


def test_goal_constraint_key_unknown(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["goal"]["constraints"] = [["hotel", "bogus", "x"]]
    reject(tmp_path, doc, "goal constraint keys unknown")


def test_goal_requestable_unknown_domain(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["goal"]["requestables"] = {"spa": ["phone"]}
    reject(tmp_path, doc, "unknown domain 'spa'")


def test_goal_requestable_unknown_slot(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["goal"]["requestables"] = {"hotel": ["fax"]}
    reject(tmp_path, doc, "'hotel'/'fax' unknown")


def test_goal_booking_unknown_domain(tmp_path):
    doc = minimal_doc()
    doc["dialogues"][0]["goal"]["booking"] = ["spa"]
    reject(tmp_path, doc, "booking for unknown domain")


def test_schema_errors_are_wrapped(tmp_path):
    doc = minimal_doc()
    doc["schema"]["slots"]["hotel"] = ["area", "area"]
    reject(tmp_path, doc, "schema")


# --- schema dict round trip ----------------------------------------------------


def test_schema_dict_round_trip(mwoz_schema):
    assert load_schema_dict(schema_to_dict(mwoz_schema)) == mwoz_schema


def test_state_triples_follow_schema_order(mwoz_schema, fig2_prev):
    triples = state_to_triples(fig2_prev, mwoz_schema)
    domains = [d for d, _, _ in triples]
    assert domains == sorted(domains, key=mwoz_schema.domains.index)
    hotel_slots = [s for d, s, _ in triples if d == "hotel"]
    order = list(mwoz_schema.slots_of("hotel"))
    assert hotel_slots == sorted(hotel_slots, key=order.index)


# --- dump / save round trip ----------------------------------------------------


def test_dump_load_round_trip(fixture_corpus, tmp_path):
    path = tmp_path / "again.json"
    save_corpus(fixture_corpus, path)
    again = load_corpus(path)
    assert again == fixture_corpus


def test_dump_is_plain_json(fixture_corpus):
    doc = dump_corpus(fixture_corpus)
    json.dumps(doc)
    assert set(doc) == {"schema", "dialogues"}


def test_save_is_byte_deterministic(fixture_corpus, tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    save_corpus(fixture_corpus, a)
    save_corpus(fixture_corpus, b)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() == (FIXTURES / "corpus.json").read_bytes()


# --- subsampling -----------------------------------------------------------------


def test_sample_presets():
    assert SAMPLE_PRESETS == {5: 400, 10: 800, 20: 1600}


def test_subsample_is_deterministic(fixture_corpus):
    first = subsample(fixture_corpus.dialogues, 10, seed=3)
    second = subsample(fixture_corpus.dialogues, 10, seed=3)
    assert [d.id for d in first] == [d.id for d in second]
    other = subsample(fixture_corpus.dialogues, 10, seed=4)
    assert [d.id for d in first] != [d.id for d in other]


def test_subsample_preserves_order(fixture_corpus):
    index = {d.id: i for i, d in enumerate(fixture_corpus.dialogues)}
    picked = subsample(fixture_corpus.dialogues, 12, seed=9)
    positions = [index[d.id] for d in picked]
    assert positions == sorted(positions)
    assert len(set(positions)) == 12


def test_subsample_bounds(fixture_corpus):
    assert subsample(fixture_corpus.dialogues, 0, seed=0) == []
    full = subsample(fixture_corpus.dialogues, 25, seed=0)
    assert full == list(fixture_corpus.dialogues)
    with pytest.raises(ValueError):
        subsample(fixture_corpus.dialogues, 26, seed=0)
    with pytest.raises(ValueError):
        subsample(fixture_corpus.dialogues, -1, seed=0)


def test_subsample_is_roughly_uniform(fixture_corpus):
    # 100 seeds x 50-of-100: each slot should be hit about half the time.
    base = fixture_corpus.dialogues[0]
    pool = [
        Dialogue(id=f"syn{i:03d}", turns=base.turns, goal=base.goal) for i in range(100)
    ]
    hits = [0] * 100
    for seed in range(100):
        for d in subsample(pool, 50, seed=seed):
            hits[int(d.id[3:])] += 1
    assert all(30 <= h <= 70 for h in hits)


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_subsample_properties(data, fixture_corpus):
    count = data.draw(st.integers(0, 25))
    seed = data.draw(st.integers(0, 2**32 - 1))
    picked = subsample(fixture_corpus.dialogues, count, seed)
    assert len(picked) == count
    ids = [d.id for d in picked]
    assert len(set(ids)) == count
    index = {d.id: i for i, d in enumerate(fixture_corpus.dialogues)}
    assert [index[i] for i in ids] == sorted(index[i] for i in ids)
