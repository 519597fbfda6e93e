"""Command line behavior: outputs, exit codes, determinism."""

import json
import sys

import pytest

from levdst import load_corpus, schema_to_dict
from levdst.cli import main

from conftest import FIXTURES, WIRE_SERVER

CORPUS = str(FIXTURES / "corpus.json")
KB_DIR = str(FIXTURES / "kb")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def schema_file(tmp_path, mwoz_schema):
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(schema_to_dict(mwoz_schema)), encoding="utf-8")
    return str(path)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def big_corpus(tmp_path_factory):
    # 1600 one-turn dialogues, just enough for the largest preset.
    dialogues = [
        {
            "id": f"d{i:04d}",
            "turns": [
                {
                    "user": f"request number {i}",
                    "response": "noted .",
                    "state": [["hotel", "area", "north"]],
                }
            ],
        }
        for i in range(1600)
    ]
    doc = {
        "schema": {"domains": ["hotel"], "slots": {"hotel": ["area"]}},
        "dialogues": dialogues,
    }
    path = tmp_path_factory.mktemp("big") / "big.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


# --- diff / patch ------------------------------------------------------------


def test_diff_between_state_files(capsys, tmp_path, schema_file):
    prev = write(tmp_path, "prev.txt", "[hotel] area centre")
    nxt = write(tmp_path, "next.txt", "[hotel] area centre people 10")
    code, out, err = run_cli(capsys, "diff", "--prev", prev, "--next", nxt, "--schema", schema_file)
    assert code == 0
    assert out == "<SOB> [hotel] people 10 <EOB>\n"
    assert err == ""


def test_diff_emits_deletes(capsys, tmp_path, schema_file):
    prev = write(tmp_path, "prev.txt", "[hotel] area centre people 10")
    nxt = write(tmp_path, "next.txt", "[hotel] area centre")
    code, out, _ = run_cli(capsys, "diff", "--prev", prev, "--next", nxt, "--schema", schema_file)
    assert code == 0
    assert out == "<SOB> [hotel] people NULL <EOB>\n"


def test_diff_rejects_dirty_state_file(capsys, tmp_path, schema_file):
    prev = write(tmp_path, "prev.txt", "[hotel] bogus 5")
    nxt = write(tmp_path, "next.txt", "[hotel] area centre")
    code, out, err = run_cli(capsys, "diff", "--prev", prev, "--next", nxt, "--schema", schema_file)
    assert code == 1
    assert out == ""
    assert "token 1: unknown_slot" in err
    assert "did not parse cleanly" in err


def test_patch_applies_span(capsys, tmp_path, schema_file):
    prev = write(tmp_path, "prev.txt", "[hotel] area centre")
    lev = write(tmp_path, "lev.txt", "<SOB> [hotel] people 10 <EOB>")
    code, out, _ = run_cli(capsys, "patch", "--prev", prev, "--lev", lev, "--schema", schema_file)
    assert code == 0
    assert out == "[hotel] area centre people 10\n"


def test_patch_deletes_via_null(capsys, tmp_path, schema_file):
    prev = write(tmp_path, "prev.txt", "[hotel] area centre people 10")
    lev = write(tmp_path, "lev.txt", "<SOB> [hotel] people NULL <EOB>")
    code, out, _ = run_cli(capsys, "patch", "--prev", prev, "--lev", lev, "--schema", schema_file)
    assert code == 0
    assert out == "[hotel] area centre\n"


def test_patch_rejects_dirty_span(capsys, tmp_path, schema_file):
    prev = write(tmp_path, "prev.txt", "[hotel] area centre")
    lev = write(tmp_path, "lev.txt", "<SOB> [hotel] people <EOB>")
    code, out, err = run_cli(capsys, "patch", "--prev", prev, "--lev", lev, "--schema", schema_file)
    assert code == 1
    assert out == ""
    assert "dangling_slot" in err


def test_diff_patch_round_trip_via_files(capsys, tmp_path, schema_file):
    prev = write(tmp_path, "prev.txt", "[hotel] stars 5 area centre [train] day sunday")
    nxt = write(tmp_path, "next.txt", "[hotel] area north [train] day sunday people 6")
    code, span_out, _ = run_cli(
        capsys, "diff", "--prev", prev, "--next", nxt, "--schema", schema_file
    )
    assert code == 0
    lev = write(tmp_path, "lev.txt", span_out.strip())
    code, state_out, _ = run_cli(
        capsys, "patch", "--prev", prev, "--lev", lev, "--schema", schema_file
    )
    assert code == 0
    assert state_out == "[hotel] area north [train] day sunday people 6\n"


# --- track / e2e ----------------------------------------------------------------


def test_track_gold_is_perfect(capsys):
    code, out, err = run_cli(
        capsys, "track", "--corpus", CORPUS, "--generator", "gold:"
    )
    assert code == 0
    assert out == '{"joint_acc": 1.0}\n'
    assert err == ""


def test_track_verbose_table(capsys):
    code, out, err = run_cli(
        capsys, "track", "--corpus", CORPUS, "--generator", "gold:", "--verbose"
    )
    assert code == 0
    assert out == '{"joint_acc": 1.0}\n'
    assert err == "joint_acc  1.0000\n"


def test_track_noisy_degrades(capsys):
    code, out, _ = run_cli(
        capsys, "track", "--corpus", CORPUS, "--generator", "noisy:p=0.5,seed=7"
    )
    assert code == 0
    assert 0.0 < json.loads(out)["joint_acc"] < 1.0


def test_e2e_gold_matches_frozen_eval(capsys, frozen_eval):
    code, out, _ = run_cli(
        capsys,
        "e2e",
        "--corpus", CORPUS,
        "--kb", KB_DIR,
        "--generator", "gold:",
    )
    assert code == 0
    assert out == json.dumps(frozen_eval["gold"]) + "\n"


def test_e2e_stdout_is_rerun_stable(capsys):
    args = ("e2e", "--corpus", CORPUS, "--kb", KB_DIR, "--generator", "gold:")
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second


def test_e2e_parallel_jobs_same_output(capsys):
    base = ("e2e", "--corpus", CORPUS, "--kb", KB_DIR, "--generator", "gold:")
    _, serial, _ = run_cli(capsys, *base)
    _, parallel, _ = run_cli(capsys, *base, "--jobs", "4")
    assert serial == parallel


# --- bench ------------------------------------------------------------------------


def test_bench_reports_token_means(capsys, frozen_eval):
    code, lev_out, _ = run_cli(capsys, "bench", "--corpus", CORPUS, "--mode", "lev")
    assert code == 0
    lev = json.loads(lev_out)
    assert set(lev) == {"not", "latency_ms"}
    assert lev["not"] == frozen_eval["not_lev"]
    assert lev["latency_ms"] > 0.0

    code, full_out, _ = run_cli(capsys, "bench", "--corpus", CORPUS, "--mode", "full_span")
    assert code == 0
    assert json.loads(full_out)["not"] == frozen_eval["not_full_span"]


def test_bench_mode_is_checked_by_argparse(capsys):
    with pytest.raises(SystemExit):
        main(["bench", "--corpus", CORPUS, "--mode", "telepathy"])


# --- sample -------------------------------------------------------------------------


def test_sample_preset_counts(capsys, big_corpus, tmp_path):
    for preset, expected in ((5, 400), (10, 800), (20, 1600)):
        out_path = tmp_path / f"sampled{preset}.json"
        code, out, _ = run_cli(
            capsys,
            "sample",
            "--corpus", big_corpus,
            "--preset", str(preset),
            "--out", str(out_path),
        )
        assert code == 0
        assert out == ""
        assert len(load_corpus(out_path).dialogues) == expected


def test_sample_stdout_determinism(capsys, big_corpus):
    args = ("sample", "--corpus", big_corpus, "--preset", "5", "--seed", "42")
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second
    _, other, _ = run_cli(capsys, "sample", "--corpus", big_corpus, "--preset", "5", "--seed", "43")
    assert first != other
    ids = [d["id"] for d in json.loads(first)["dialogues"]]
    assert len(ids) == 400
    assert ids == sorted(ids)


def test_sample_too_small_corpus_fails(capsys):
    code, out, err = run_cli(capsys, "sample", "--corpus", CORPUS, "--preset", "5")
    assert code == 1
    assert out == ""
    assert "cannot sample 400 of 25" in err


# --- conformance ------------------------------------------------------------------------


def server_spec(*extra):
    return "exec:" + " ".join([sys.executable, str(WIRE_SERVER), *extra])


def test_conformance_echo_passes(capsys):
    code, out, err = run_cli(
        capsys, "conformance", "--generator", server_spec("--mode", "echo")
    )
    assert code == 0
    assert json.loads(out) == {"passed": True, "checks": 6}
    assert err.count("pass:") == 6
    assert "FAIL" not in err


def test_conformance_wrong_id_fails(capsys):
    code, out, err = run_cli(
        capsys, "conformance", "--generator", server_spec("--mode", "wrong-id")
    )
    assert code == 1
    assert json.loads(out)["passed"] is False
    assert "FAIL" in err


def test_conformance_rejects_oracle_specs(capsys):
    code, out, err = run_cli(capsys, "conformance", "--generator", "gold:")
    assert code == 1
    assert "needs a corpus" in err


# --- failure exit codes --------------------------------------------------------------------


def test_missing_corpus_file_is_io_error(capsys):
    code, out, err = run_cli(
        capsys, "track", "--corpus", "/no/such/file.json", "--generator", "gold:"
    )
    assert code == 2
    assert err.startswith("error:")


def test_malformed_corpus_is_io_error(capsys, tmp_path):
    bad = write(tmp_path, "bad.json", "{not json")
    code, _, err = run_cli(capsys, "track", "--corpus", bad, "--generator", "gold:")
    assert code == 2
    assert "invalid JSON" in err


def test_missing_kb_dir_is_io_error(capsys):
    code, _, err = run_cli(
        capsys,
        "e2e",
        "--corpus", CORPUS,
        "--kb", "/no/such/dir",
        "--generator", "gold:",
    )
    assert code == 2
    assert err.startswith("error:")


def test_bad_generator_spec_is_validation_error(capsys):
    code, _, err = run_cli(
        capsys, "track", "--corpus", CORPUS, "--generator", "carrier-pigeon:coop"
    )
    assert code == 1
    assert "unknown generator scheme" in err


def test_dead_wire_generator_is_io_error(capsys):
    code, _, err = run_cli(
        capsys,
        "track",
        "--corpus", CORPUS,
        "--generator", server_spec("--mode", "die-after", "--count", "0"),
        "--timeout", "5",
    )
    assert code == 2
    assert "error:" in err


def test_unknown_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["track", "--corpus", CORPUS, "--generator", "gold:", "--bogus"])
    assert exc.value.code == 2
