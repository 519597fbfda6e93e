"""Acceptance for the external replay bridge.

The bridge is a separate Node package that speaks only the wire protocol;
these tests hold it to the same bar as any external generator: it must pass
the conformance probes, and an end-to-end run answered from a recorded gold
table must reproduce the in-process gold metrics bit for bit.

Everything here skips when bridge/dist is absent, so the rest of the suite
never depends on the Node toolchain.
"""

import json
import shutil

import pytest

from levdst import PipelineConfig, record_gold_replay
from levdst.cli import main

from conftest import FIXTURES

ROOT = FIXTURES.parent.parent
BRIDGE_CLI = ROOT / "bridge" / "dist" / "cli.js"
NODE = shutil.which("node")

pytestmark = pytest.mark.skipif(
    not BRIDGE_CLI.exists() or NODE is None,
    reason="bridge is not built (cd bridge && npm install && npm run build)",
)

CORPUS = str(FIXTURES / "corpus.json")
KB_DIR = str(FIXTURES / "kb")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def bridge_spec(table) -> str:
    return f"exec:{NODE} {BRIDGE_CLI} --mode replay --replay-file {table}"


def write_table(path, rows):
    text = "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def gold_table(tmp_path_factory, fixture_corpus, fixture_kb):
    cfg = PipelineConfig(context_window=2)
    rows = record_gold_replay(fixture_corpus, fixture_kb, cfg)
    return write_table(tmp_path_factory.mktemp("bridge") / "gold.jsonl", rows)


def test_bridge_passes_conformance(capsys, gold_table):
    code, out, err = run_cli(capsys, "conformance", "--generator", bridge_spec(gold_table))
    assert code == 0
    assert json.loads(out) == {"passed": True, "checks": 6}
    assert err.count("pass:") == 6


def test_bridge_passes_conformance_on_an_empty_table(capsys, tmp_path):
    # The probes are never recorded anywhere; empty replies must still be
    # well-formed frames.
    table = write_table(tmp_path / "empty.jsonl", [])
    code, out, _ = run_cli(capsys, "conformance", "--generator", bridge_spec(table))
    assert code == 0
    assert json.loads(out) == {"passed": True, "checks": 6}


def test_e2e_through_bridge_reproduces_gold_bit_for_bit(capsys, gold_table, frozen_eval):
    code, out, _ = run_cli(
        capsys,
        "e2e",
        "--corpus", CORPUS,
        "--kb", KB_DIR,
        "--generator", bridge_spec(gold_table),
    )
    assert code == 0
    assert out == json.dumps(frozen_eval["gold"]) + "\n"


def test_e2e_through_bridge_matches_in_process_gold_run(capsys, gold_table):
    external = run_cli(
        capsys,
        "e2e",
        "--corpus", CORPUS,
        "--kb", KB_DIR,
        "--generator", bridge_spec(gold_table),
    )
    in_process = run_cli(
        capsys,
        "e2e",
        "--corpus", CORPUS,
        "--kb", KB_DIR,
        "--generator", "gold:",
    )
    assert external[0] == in_process[0] == 0
    assert external[1] == in_process[1]
