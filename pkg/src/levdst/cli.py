"""Command line interface.

Subcommands: diff, patch, track, e2e, bench, sample, conformance. Machine
reports go to stdout as one JSON line; --verbose adds a human table on
stderr. Exit codes: 0 success, 1 validation or metric failure, 2 I/O or
transport failure (argparse uses 2 for unknown flags as well). Given the
same flags and seed every run is byte-identical, except the measured
latency_ms field of bench reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .codec import parse_full_state, parse_lev, serialize_full_state, serialize_lev
from .corpus import (
    SAMPLE_PRESETS,
    Corpus,
    CorpusFormatError,
    load_corpus,
    load_schema_dict,
    save_corpus,
    subsample,
)
from .generators import (
    ExternalGenerator,
    GeneratorError,
    parse_generator_spec,
    run_conformance,
)
from .kb import KbLoadError, KnowledgeBase, load_kb
from .lev import apply_lev, compute_lev
from .metrics import (
    MissingKbError,
    combined_score,
    corpus_bleu,
    inform_success,
    joint_goal_accuracy,
    report_json,
    report_table,
)
from .pipeline import bench_not_latency, run_corpus
from .state import PipelineConfig

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _load_schema_file(path: str):
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorpusFormatError(f"{path}: {exc}") from exc
    return load_schema_dict(raw, path)


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8").strip()


def _parse_state_strict(text: str, schema, label: str):
    parsed = parse_full_state(text, schema)
    if not parsed.clean:
        for diag in parsed.diagnostics:
            print(f"{label}: token {diag.position}: {diag.kind.value}", file=sys.stderr)
        raise _ValidationFailure(f"{label} did not parse cleanly")
    return parsed.state


class _ValidationFailure(Exception):
    pass


def _emit(values: dict, verbose: bool) -> None:
    print(report_json(values))
    if verbose:
        print(report_table(values), file=sys.stderr)


def cmd_diff(args) -> int:
    schema = _load_schema_file(args.schema)
    prev = _parse_state_strict(_read_text(args.prev), schema, args.prev)
    nxt = _parse_state_strict(_read_text(args.next), schema, args.next)
    print(serialize_lev(compute_lev(prev, nxt, schema), schema))
    return EXIT_OK


def cmd_patch(args) -> int:
    schema = _load_schema_file(args.schema)
    prev = _parse_state_strict(_read_text(args.prev), schema, args.prev)
    report = parse_lev(_read_text(args.lev), schema)
    if not report.clean:
        for diag in report.diagnostics:
            print(f"{args.lev}: token {diag.position}: {diag.kind.value}", file=sys.stderr)
        raise _ValidationFailure(f"{args.lev} did not parse cleanly")
    print(serialize_full_state(apply_lev(prev, report.span, schema), schema))
    return EXIT_OK


def _empty_kb(corpus: Corpus) -> KnowledgeBase:
    return KnowledgeBase(schema=corpus.schema, tables={})


def _run(args, corpus: Corpus, kb: KnowledgeBase):
    cfg = PipelineConfig(context_window=args.window, rng_seed=args.seed)
    factory = parse_generator_spec(args.generator, corpus, timeout=args.timeout)
    return run_corpus(
        corpus,
        factory,
        kb,
        cfg,
        gold_history=getattr(args, "gold_history", False),
        jobs=args.jobs,
    )


def cmd_track(args) -> int:
    corpus = load_corpus(args.corpus)
    runs = _run(args, corpus, _empty_kb(corpus))
    predicted = [state for run in runs for state in run.states]
    gold = [turn.gold_state for d in corpus.dialogues for turn in d.turns]
    report = joint_goal_accuracy(predicted, gold)
    _emit({"joint_acc": report.joint_accuracy}, args.verbose)
    return EXIT_OK


def cmd_e2e(args) -> int:
    corpus = load_corpus(args.corpus)
    kb = load_kb(args.kb, corpus.schema)
    runs = _run(args, corpus, kb)
    predicted = [state for run in runs for state in run.states]
    gold = [turn.gold_state for d in corpus.dialogues for turn in d.turns]
    joint = joint_goal_accuracy(predicted, gold).joint_accuracy
    inform, success = inform_success(
        corpus.dialogues,
        [run.responses for run in runs],
        [run.states for run in runs],
        kb,
    )
    candidates = [response for run in runs for response in run.responses]
    references = [turn.gold_delex_response for d in corpus.dialogues for turn in d.turns]
    bleu = corpus_bleu(candidates, references)
    _emit(
        {
            "joint_acc": joint,
            "inform": inform,
            "success": success,
            "bleu": bleu,
            "combined": combined_score(inform, success, bleu),
        },
        args.verbose,
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    corpus = load_corpus(args.corpus)
    cfg = PipelineConfig(context_window=args.window, rng_seed=args.seed)
    _emit(bench_not_latency(corpus, cfg, args.mode), args.verbose)
    return EXIT_OK


def cmd_sample(args) -> int:
    corpus = load_corpus(args.corpus)
    count = SAMPLE_PRESETS[args.preset]
    try:
        picked = subsample(corpus.dialogues, count, args.seed)
    except ValueError as exc:
        raise _ValidationFailure(str(exc)) from exc
    sampled = Corpus(schema=corpus.schema, dialogues=tuple(picked))
    if args.out == "-":
        from .corpus import dump_corpus

        print(json.dumps(dump_corpus(sampled), indent=2))
    else:
        save_corpus(sampled, args.out)
    return EXIT_OK


def cmd_conformance(args) -> int:
    factory = parse_generator_spec(args.generator, corpus=None, timeout=args.timeout)
    generator = factory()
    if not isinstance(generator, ExternalGenerator):
        raise GeneratorError("conformance needs a wire generator (exec: or tcp:)")
    try:
        report = run_conformance(generator._transport, timeout=args.timeout)
    finally:
        generator.close()
    for check in report.checks:
        status = "pass" if check.passed else "FAIL"
        detail = f"  {check.detail}" if check.detail else ""
        print(f"{status}: {check.name}{detail}", file=sys.stderr)
    print(json.dumps({"passed": report.passed, "checks": len(report.checks)}))
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _add_common_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--generator", required=True, help="gold: | noisy:p=F,seed=N | exec:CMD | tcp:HOST:PORT")
    parser.add_argument("--jobs", type=int, default=1, help="parallel dialogue workers")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--timeout", type=float, default=30.0, help="wire reply timeout, seconds")
    parser.add_argument("--verbose", action="store_true", help="human table on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levdst", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diff", help="edit span between two state files")
    p.add_argument("--prev", required=True)
    p.add_argument("--next", required=True)
    p.add_argument("--schema", required=True)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("patch", help="apply an edit span to a state file")
    p.add_argument("--prev", required=True)
    p.add_argument("--lev", required=True)
    p.add_argument("--schema", required=True)
    p.set_defaults(func=cmd_patch)

    p = sub.add_parser("track", help="state tracking accuracy over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--gold-history", dest="gold_history", action="store_true")
    _add_common_run_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("e2e", help="end-to-end metrics over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kb", required=True, help="directory of <domain>.json tables")
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--gold-history", dest="gold_history", action="store_true")
    _add_common_run_flags(p)
    p.set_defaults(func=cmd_e2e)

    p = sub.add_parser("bench", help="tokens per turn and per-turn latency")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("lev", "full_span"), required=True)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sample", help="deterministic low-resource subsample")
    p.add_argument("--corpus", required=True)
    p.add_argument("--preset", type=int, choices=sorted(SAMPLE_PRESETS), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output path, - for stdout")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("conformance", help="probe a wire generator for protocol discipline")
    p.add_argument("--generator", required=True)
    p.add_argument("--timeout", type=float, default=10.0)
    p.set_defaults(func=cmd_conformance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MissingKbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CorpusFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except KbLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GeneratorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def run() -> None:
    raise SystemExit(main())
