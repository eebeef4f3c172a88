"""Run a system over MQuAKE-style cases and aggregate an accuracy/latency report."""

from __future__ import annotations

import json
import logging
import statistics
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..baseline import DEFAULT_K, EditMemory, baseline_answer
from ..chain import PromptTemplateSet
from ..errors import StrueditError
from ..oracle import Oracle, RecordingOracle
from ..pipeline import PipelineConfig, answer_question
from ..store import KnowledgeStructure, normalize
from .dataset import MultiHopCase
from .memory import MemorySpec, build_edit_memory

logger = logging.getLogger(__name__)

REPORT_VERSION = "report/1"
CORRECT = "correct"
WRONG_ANSWER = "wrong_answer"


@dataclass(frozen=True)
class HarnessConfig:
    memory: MemorySpec = field(default_factory=MemorySpec)
    system: str = "struedit"
    concurrency_limit: int = 1
    seed: int = 0
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    baseline_k: int = DEFAULT_K
    paraphrase_rule: str = "any"

    def __post_init__(self) -> None:
        if self.system not in ("struedit", "ice_baseline"):
            raise ValueError(f"unknown system {self.system!r}")
        if self.concurrency_limit < 1:
            raise ValueError("concurrency_limit must be positive")
        if self.paraphrase_rule not in ("any", "all"):
            raise ValueError(f"unknown paraphrase rule {self.paraphrase_rule!r}")

    def echo(self) -> dict:
        return {
            "system": self.system,
            "memory": self.memory.describe(),
            "full_includes_originals": self.memory.full_includes_originals,
            "seed": self.seed,
            "concurrency_limit": self.concurrency_limit,
            "paraphrase_rule": self.paraphrase_rule,
            "extraction_mode": self.pipeline.extraction_mode,
            "matcher": asdict(self.pipeline.matcher),
            "fanout_policy": self.pipeline.fanout_policy,
            "max_hops": self.pipeline.max_hops,
            "timing": self.pipeline.timing,
            "baseline_k": self.baseline_k,
        }


@dataclass(frozen=True)
class QuestionOutcome:
    question: str
    answer: str
    correct: bool
    reason: str
    latency: float
    oracle_calls: int


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    hop_count: int
    correct: bool
    reason: str
    latency: float
    oracle_calls: int
    questions: tuple[QuestionOutcome, ...]


def answer_is_correct(answer: str, case: MultiHopCase) -> bool:
    got = normalize(answer or "")
    if not got:
        return False
    return any(got == normalize(gold) for gold in (case.gold_new_answer, *case.answer_aliases) if gold)


def _ask_struedit(question, case, structure, oracle, templates, config) -> QuestionOutcome:
    result = answer_question(question, structure, oracle, templates, config.pipeline)
    if result.answered:
        answer = result.answer.display
        ok = answer_is_correct(answer, case)
        reason = CORRECT if ok else WRONG_ANSWER
    else:
        answer, ok, reason = "", False, result.reason
    return QuestionOutcome(question, answer, ok, reason, result.duration, result.oracle_calls)


def _ask_baseline(question, case, memory: EditMemory, oracle, config) -> QuestionOutcome:
    recorder = RecordingOracle(oracle)
    started = time.monotonic()
    try:
        answer = baseline_answer(question, memory, recorder, config.baseline_k)
        ok = answer_is_correct(answer, case)
        reason = CORRECT if ok else WRONG_ANSWER
    except StrueditError as exc:
        answer, ok, reason = "", False, exc.reason
    if config.pipeline.timing == "oracle":
        latency = recorder.total_latency
    else:
        latency = time.monotonic() - started
    return QuestionOutcome(question, answer, ok, reason, latency, recorder.call_count)


def evaluate_case(
    case: MultiHopCase,
    structure: KnowledgeStructure,
    memory: EditMemory,
    oracle: Oracle,
    templates: PromptTemplateSet,
    config: HarnessConfig,
) -> CaseResult:
    outcomes = []
    for question in case.questions:
        if config.system == "struedit":
            outcomes.append(_ask_struedit(question, case, structure, oracle, templates, config))
        else:
            outcomes.append(_ask_baseline(question, case, memory, oracle, config))
    verdicts = [o.correct for o in outcomes]
    correct = any(verdicts) if config.paraphrase_rule == "any" else all(verdicts)
    if correct:
        reason = CORRECT
    else:
        # first failing paraphrase explains the miss
        reason = next(o.reason for o in outcomes if not o.correct)
    return CaseResult(
        case.case_id,
        case.hop_count,
        correct,
        reason,
        sum(o.latency for o in outcomes),
        sum(o.oracle_calls for o in outcomes),
        tuple(outcomes),
    )


def percentile(values, q: float) -> float:
    """Linear-interpolation percentile, ``q`` in [0, 100]."""
    ordered = sorted(values)
    if not ordered:
        return 0.0
    pos = (len(ordered) - 1) * q / 100.0
    lo = int(pos)
    hi = min(lo + 1, len(ordered) - 1)
    return ordered[lo] + (ordered[hi] - ordered[lo]) * (pos - lo)


def _latency_stats(values) -> dict:
    values = list(values)
    if not values:
        return {"mean": 0.0, "median": 0.0, "p95": 0.0}
    return {
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "p95": percentile(values, 95),
    }


@dataclass
class EvaluationReport:
    """Aggregated run results.

    Latency and oracle calls are accounted per case (one multi-hop question
    with all its paraphrases), which is the unit accuracy is scored on.
    """

    config: dict
    results: list[CaseResult]

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def overall_accuracy(self) -> float:
        return sum(r.correct for r in self.results) / self.total if self.results else 0.0

    @property
    def per_hop_accuracy(self) -> dict[int, float]:
        by_hop: dict[int, list[bool]] = {}
        for r in self.results:
            by_hop.setdefault(r.hop_count, []).append(r.correct)
        return {h: sum(v) / len(v) for h, v in sorted(by_hop.items())}

    @property
    def error_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(r.reason for r in self.results).items()))

    @property
    def mean_latency(self) -> float:
        return statistics.fmean(r.latency for r in self.results) if self.results else 0.0

    def to_dict(self, include_cases: bool = True) -> dict:
        hops = sorted({r.hop_count for r in self.results})
        n_questions = sum(len(r.questions) for r in self.results)
        report = {
            "version": REPORT_VERSION,
            "config": self.config,
            "cases": self.total,
            "overall_accuracy": self.overall_accuracy,
            "per_hop_accuracy": {str(h): acc for h, acc in self.per_hop_accuracy.items()},
            "per_hop_cases": {str(h): sum(r.hop_count == h for r in self.results) for h in hops},
            "error_counts": self.error_counts,
            "latency": {
                "unit": "seconds per case",
                "overall": _latency_stats(r.latency for r in self.results),
                "per_hop": {
                    str(h): _latency_stats(r.latency for r in self.results if r.hop_count == h) for h in hops
                },
            },
            "oracle_calls": {
                "mean_per_case": (sum(r.oracle_calls for r in self.results) / self.total) if self.total else 0.0,
                "mean_per_question": (
                    sum(r.oracle_calls for r in self.results) / n_questions if n_questions else 0.0
                ),
            },
        }
        if include_cases:
            report["case_results"] = [
                {
                    "case_id": r.case_id,
                    "hop_count": r.hop_count,
                    "correct": r.correct,
                    "reason": r.reason,
                    "answers": [q.answer for q in r.questions],
                    "oracle_calls": r.oracle_calls,
                    "latency": r.latency,
                }
                for r in self.results
            ]
        return report

    def to_json(self, include_cases: bool = True) -> str:
        return json.dumps(self.to_dict(include_cases), indent=2, ensure_ascii=False) + "\n"

    def write(self, path: str | Path, include_cases: bool = True) -> None:
        Path(path).write_text(self.to_json(include_cases), encoding="utf-8")


def run_evaluation(
    cases: list[MultiHopCase],
    config: HarnessConfig,
    oracle: Oracle,
    templates: PromptTemplateSet,
    memory_pool: list[MultiHopCase] | None = None,
) -> EvaluationReport:
    """Evaluate every case; ``memory_pool`` (default: ``cases``) feeds full/fixed-count memories."""
    if not cases:
        raise ValueError("no cases to evaluate")
    pool = memory_pool if memory_pool is not None else cases
    shared = None
    if config.memory.mode == "full":
        shared = build_edit_memory(pool, cases[0], config.memory, config.seed)

    def run_one(case: MultiHopCase) -> CaseResult:
        structure, memory = shared or build_edit_memory(pool, case, config.memory, config.seed)
        return evaluate_case(case, structure, memory, oracle, templates, config)

    if config.concurrency_limit == 1:
        results = [run_one(c) for c in cases]
    else:
        with ThreadPoolExecutor(max_workers=config.concurrency_limit) as pool_exec:
            results = list(pool_exec.map(run_one, cases))
    return EvaluationReport(config.echo(), results)
