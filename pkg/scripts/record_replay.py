#!/usr/bin/env python3
"""Record a gold replay table for a corpus.

Runs the pipeline with the gold oracle and dumps every request/reply pair as
newline-delimited JSON, one {"kind", "input", "output"} object per line.
External generators (for example the TypeScript bridge in replay mode) can
then answer real pipeline traffic without reimplementing the tracker.

Usage:
    python3 scripts/record_replay.py --corpus tests/fixtures/corpus.json \
        --kb tests/fixtures/kb --out replay.jsonl
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from levdst.corpus import load_corpus  # noqa: E402
from levdst.kb import load_kb  # noqa: E402
from levdst.pipeline import record_gold_replay  # noqa: E402
from levdst.state import PipelineConfig  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--kb", required=True)
    parser.add_argument("--window", type=int, default=2)
    parser.add_argument("--out", default="-")
    args = parser.parse_args()

    corpus = load_corpus(args.corpus)
    kb = load_kb(args.kb, corpus.schema)
    cfg = PipelineConfig(context_window=args.window)
    rows = record_gold_replay(corpus, kb, cfg)
    text = "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
