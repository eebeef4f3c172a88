"""``edit-eval`` command line: run, inspect, trace, synth."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..chain import load_templates
from ..errors import DatasetError, OracleConfigError, StrueditError
from ..matcher import MatcherConfig
from ..oracle import RecordingOracle, RemoteOracle, ScriptedOracle
from ..pipeline import PipelineConfig, answer_question
from ..baseline import baseline_answer
from .dataset import ingest_mquake, save_mquake
from .evaluate import HarnessConfig, answer_is_correct, run_evaluation
from .memory import MemorySpec, build_edit_memory
from .synthetic import generate_suite, scripted_oracle_for

logger = logging.getLogger("struedit")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATASET = 2
EXIT_ORACLE = 3


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="MQuAKE-format JSON file")
    p.add_argument("--system", choices=["struedit", "ice"], default="struedit")
    p.add_argument("--memory", default="relevant", help="relevant | full | count:<n>")
    p.add_argument(
        "--full-includes-originals",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="include every case's original triples in full/count memories",
    )
    p.add_argument("--oracle", default="remote", help="scripted:<fixture.json> | remote")
    p.add_argument("--endpoint", help="chat-completion URL (default: $ORACLE_ENDPOINT)")
    p.add_argument("--model", default="", help="model name for the remote oracle")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--extraction", choices=["llm", "det"], default="llm")
    p.add_argument("--matcher", choices=["oracle", "lexical"], default="oracle")
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--min-score", type=float, default=0.0, help="lexical matcher acceptance threshold")
    p.add_argument("--fanout", choices=["strict", "lenient"], default="strict")
    p.add_argument("--max-hops", type=int, default=6)
    p.add_argument("--ice-k", type=int, default=4, help="statements retrieved by the ICE baseline")
    p.add_argument("--paraphrases", choices=["any", "all"], default="any")
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--timing",
        choices=["wall", "oracle"],
        help="latency clock; defaults to 'oracle' for scripted oracles and 'wall' otherwise",
    )
    p.add_argument("--templates", help="directory with chain_generation.txt / skeleton_extraction.txt")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edit-eval", description="Multi-hop knowledge editing evaluation")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a system and write a JSON report")
    _add_run_options(run)
    run.add_argument("--out", help="report path (default: stdout)")
    run.add_argument("--no-case-results", action="store_true", help="omit per-case rows from the report")

    inspect = sub.add_parser("inspect", help="summarize dataset ingestion")
    inspect.add_argument("--dataset", required=True)

    trace = sub.add_parser("trace", help="run one case and dump the full oracle transcript")
    _add_run_options(trace)
    trace.add_argument("--case", required=True, help="case id")
    trace.add_argument("--out", help="trace path (default: stdout)")

    synth = sub.add_parser("synth", help="write a synthetic dataset and matching scripted-oracle fixture")
    synth.add_argument("--out-dir", required=True)
    synth.add_argument("--per-hop", default="2:20,3:20,4:20", help="hops:count pairs")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--latency", type=float, default=0.0, help="simulated seconds per scripted call")
    synth.add_argument("--templates")
    return parser


def _make_oracle(args):
    spec = args.oracle
    if spec.startswith("scripted:"):
        return ScriptedOracle.load(spec.split(":", 1)[1]), True
    if spec == "remote":
        return (
            RemoteOracle.from_env(args.model, args.endpoint, timeout=args.timeout, max_retries=args.max_retries),
            False,
        )
    raise OracleConfigError(f"unknown oracle spec {spec!r}; expected scripted:<fixture> or remote")


def _configs(args, scripted: bool) -> HarnessConfig:
    timing = args.timing or ("oracle" if scripted else "wall")
    pipeline = PipelineConfig(
        extraction_mode="llm" if args.extraction == "llm" else "deterministic",
        matcher=MatcherConfig(strategy=args.matcher, prefilter_top_k=args.top_k, min_lexical_score=args.min_score),
        fanout_policy=args.fanout,
        max_hops=args.max_hops,
        timing=timing,
    )
    return HarnessConfig(
        memory=MemorySpec.parse(args.memory, args.full_includes_originals),
        system="struedit" if args.system == "struedit" else "ice_baseline",
        concurrency_limit=args.concurrency,
        seed=args.seed,
        pipeline=pipeline,
        baseline_k=args.ice_k,
        paraphrase_rule=args.paraphrases,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    ingestion = ingest_mquake(args.dataset)
    if not ingestion.cases:
        raise DatasetError(f"{args.dataset}: no usable cases ({len(ingestion.skipped)} skipped)")
    oracle, scripted = _make_oracle(args)
    config = _configs(args, scripted)
    report = run_evaluation(ingestion.cases, config, oracle, load_templates(args.templates))
    _emit(report.to_json(include_cases=not args.no_case_results), args.out)
    logger.info("accuracy %.4f over %d cases", report.overall_accuracy, report.total)
    return EXIT_OK


def cmd_inspect(args) -> int:
    ingestion = ingest_mquake(args.dataset)
    summary = {
        "dataset": str(args.dataset),
        "cases": len(ingestion.cases),
        "skipped": len(ingestion.skipped),
        "skip_reasons": [{"case_id": cid, "reason": reason} for cid, reason in ingestion.skipped],
        "hop_histogram": {str(h): n for h, n in ingestion.hop_histogram().items()},
        "questions": sum(len(c.questions) for c in ingestion.cases),
        "rewrites": sum(len(c.rewrites) for c in ingestion.cases),
    }
    sys.stdout.write(json.dumps(summary, indent=2, ensure_ascii=False) + "\n")
    return EXIT_OK


def cmd_trace(args) -> int:
    ingestion = ingest_mquake(args.dataset)
    by_id = {c.case_id: c for c in ingestion.cases}
    if args.case not in by_id:
        raise DatasetError(f"case {args.case!r} not found in {args.dataset}")
    case = by_id[args.case]
    oracle, scripted = _make_oracle(args)
    config = _configs(args, scripted)
    templates = load_templates(args.templates)
    structure, memory = build_edit_memory(ingestion.cases, case, config.memory, config.seed)
    questions = []
    for question in case.questions:
        recorder = RecordingOracle(oracle)
        if config.system == "struedit":
            result = answer_question(question, structure, recorder, templates, config.pipeline)
            entry = {
                "question": question,
                "status": result.status,
                "reason": result.reason,
                "detail": result.detail,
                "answer": result.answer.display if result.answer else None,
                "skeleton": (
                    {
                        "entity": result.skeleton.source_entity.display,
                        "relations": [r.display for r in result.skeleton.relations],
                    }
                    if result.skeleton
                    else None
                ),
                "path": [list(h.as_text()) for h in result.path] if result.path else [],
                "stages": [
                    {"stage": t.stage, "duration": t.duration, "oracle_calls": t.oracle_calls} for t in result.trace
                ],
            }
        else:
            try:
                answer = baseline_answer(question, memory, recorder, config.baseline_k)
                entry = {"question": question, "status": "answered", "answer": answer}
            except StrueditError as exc:
                entry = {"question": question, "status": "failed", "reason": exc.reason, "detail": str(exc)}
        entry["correct"] = bool(entry.get("answer")) and answer_is_correct(entry["answer"], case)
        entry["transcript"] = recorder.dump()
        questions.append(entry)
    dump = {
        "case_id": case.case_id,
        "hop_count": case.hop_count,
        "gold": case.gold_new_answer,
        "aliases": list(case.answer_aliases),
        "structure_triples": len(structure),
        "config": config.echo(),
        "questions": questions,
    }
    _emit(json.dumps(dump, indent=2, ensure_ascii=False) + "\n", args.out)
    return EXIT_OK


def _parse_per_hop(text: str) -> dict[int, int]:
    out = {}
    for part in text.split(","):
        hops, count = part.split(":")
        out[int(hops)] = int(count)
    return out


def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cases = generate_suite(_parse_per_hop(args.per_hop), args.seed)
    save_mquake(out_dir / "dataset.json", cases)
    scripted_oracle_for(cases, load_templates(args.templates), args.latency).save(out_dir / "oracle.json")
    sys.stdout.write(f"wrote {len(cases)} cases to {out_dir}\n")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "inspect": cmd_inspect, "trace": cmd_trace, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except DatasetError as exc:
        print(f"edit-eval: dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except OracleConfigError as exc:
        print(f"edit-eval: oracle configuration error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except ValueError as exc:
        print(f"edit-eval: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
