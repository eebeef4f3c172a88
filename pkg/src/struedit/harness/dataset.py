"""MQuAKE-format ingestion.

Each record in the released JSON array looks like::

    {"case_id": 1,
     "requested_rewrite": [{"prompt": "{} was created by", "subject": "...",
                            "target_new": {"str": ...}, "target_true": {"str": ...}, ...}],
     "questions": [...],
     "answer": ..., "answer_alias": [...],
     "new_answer": ..., "new_answer_alias": [...],
     "orig": {"triples_labeled": [[s, r, o], ...], "new_triples_labeled": [[s, r, o], ...], ...}}

Records that parse but violate a case invariant are skipped and counted;
records of the wrong JSON shape raise ``SchemaMismatch``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DatasetUnreadable, MalformedTriple, SchemaMismatch
from ..store import EditOperation, FactTriple, normalize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiHopCase:
    case_id: str
    questions: tuple[str, ...]
    gold_new_answer: str
    answer_aliases: tuple[str, ...]
    original_triples: tuple[FactTriple, ...]
    edited_triples: tuple[FactTriple, ...]
    rewrites: tuple[EditOperation, ...]
    original_answer: str = ""

    @property
    def hop_count(self) -> int:
        return len(self.edited_triples)

    def invariant_violation(self) -> str | None:
        if not self.questions:
            return "no questions"
        if not self.edited_triples:
            return "no edited triples"
        entities = {t.subject for t in self.original_triples + self.edited_triples}
        entities |= {t.object for t in self.original_triples + self.edited_triples}
        for rw in self.rewrites:
            if rw.subject not in entities:
                return f"rewrite subject {rw.subject.display!r} not in the case's triples"
        return None


@dataclass
class Ingestion:
    cases: list[MultiHopCase] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def hop_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for case in self.cases:
            hist[case.hop_count] = hist.get(case.hop_count, 0) + 1
        return dict(sorted(hist.items()))


def _expect(value, kind, path: str):
    if not isinstance(value, kind):
        raise SchemaMismatch(path, f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def _strings(value, path: str) -> tuple[str, ...]:
    _expect(value, list, path)
    return tuple(_expect(v, str, f"{path}[{i}]") for i, v in enumerate(value))


def _triples(value, path: str) -> tuple[FactTriple, ...]:
    _expect(value, list, path)
    out = []
    for i, item in enumerate(value):
        _expect(item, list, f"{path}[{i}]")
        if len(item) != 3:
            raise SchemaMismatch(f"{path}[{i}]", f"expected 3 fields, got {len(item)}")
        for j, part in enumerate(item):
            _expect(part, str, f"{path}[{i}][{j}]")
        out.append(FactTriple.of(*item))
    return tuple(out)


def _target_str(value, path: str) -> str:
    if isinstance(value, dict):
        return _expect(value.get("str"), str, f"{path}.str")
    return _expect(value, str, path)


def _rewrite_relation(subject: str, new_obj: str, old_obj: str | None, prompt: str, original, edited) -> str:
    s = normalize(subject)
    for t in edited:
        if t.subject.label == s and t.object.label == normalize(new_obj):
            return t.relation.display
    if old_obj is not None:
        for t in original:
            if t.subject.label == s and t.object.label == normalize(old_obj):
                return t.relation.display
    return prompt.replace("{}", " ").strip()


def _parse_case(record, index: int) -> MultiHopCase:
    at = f"[{index}]"
    _expect(record, dict, at)
    case_id = str(record.get("case_id", index))
    questions = _strings(record.get("questions", []), f"{at}.questions")
    new_answer = record.get("new_answer", "")
    _expect(new_answer, str, f"{at}.new_answer")
    aliases = _strings(record.get("new_answer_alias", []), f"{at}.new_answer_alias")
    orig = _expect(record.get("orig", {}), dict, f"{at}.orig")
    original = _triples(orig.get("triples_labeled", []), f"{at}.orig.triples_labeled")
    edited = _triples(orig.get("new_triples_labeled", []), f"{at}.orig.new_triples_labeled")

    rewrites = []
    for j, rw in enumerate(_expect(record.get("requested_rewrite", []), list, f"{at}.requested_rewrite")):
        rpath = f"{at}.requested_rewrite[{j}]"
        _expect(rw, dict, rpath)
        subject = _expect(rw.get("subject"), str, f"{rpath}.subject")
        new_obj = _target_str(rw.get("target_new"), f"{rpath}.target_new")
        old_obj = _target_str(rw["target_true"], f"{rpath}.target_true") if "target_true" in rw else None
        prompt = rw.get("prompt", "")
        _expect(prompt, str, f"{rpath}.prompt")
        relation = _rewrite_relation(subject, new_obj, old_obj, prompt, original, edited)
        if old_obj is not None and normalize(old_obj) == normalize(new_obj):
            old_obj = None
        rewrites.append(EditOperation.of(subject, relation, new_obj, old_obj))

    return MultiHopCase(
        case_id=case_id,
        questions=questions,
        gold_new_answer=new_answer,
        answer_aliases=aliases,
        original_triples=original,
        edited_triples=edited,
        rewrites=tuple(rewrites),
        original_answer=record.get("answer", "") if isinstance(record.get("answer", ""), str) else "",
    )


def ingest_mquake(path: str | Path) -> Ingestion:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DatasetUnreadable(f"{path}: {exc}") from exc
    _expect(data, list, "$")
    result = Ingestion()
    for i, record in enumerate(data):
        try:
            case = _parse_case(record, i)
        except MalformedTriple as exc:
            reason = f"malformed triple: {exc}"
            case = None
        else:
            reason = case.invariant_violation()
        if reason is not None:
            cid = str(record.get("case_id", i)) if isinstance(record, dict) else str(i)
            logger.warning("skipping case %s: %s", cid, reason)
            result.skipped.append((cid, reason))
            continue
        result.cases.append(case)
    return result


def load_mquake(path: str | Path) -> list[MultiHopCase]:
    return ingest_mquake(path).cases


def case_to_record(case: MultiHopCase) -> dict:
    """Inverse of ingestion, in the released schema (labels only)."""
    return {
        "case_id": case.case_id,
        "requested_rewrite": [
            {
                "prompt": "{} " + rw.relation.display,
                "subject": rw.subject.display,
                "target_new": {"str": rw.new_object.display},
                **({"target_true": {"str": rw.old_object.display}} if rw.old_object is not None else {}),
            }
            for rw in case.rewrites
        ],
        "questions": list(case.questions),
        "answer": case.original_answer,
        "new_answer": case.gold_new_answer,
        "new_answer_alias": list(case.answer_aliases),
        "orig": {
            "triples_labeled": [list(t.as_text()) for t in case.original_triples],
            "new_triples_labeled": [list(t.as_text()) for t in case.edited_triples],
        },
    }


def save_mquake(path: str | Path, cases) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([case_to_record(c) for c in cases], fh, indent=2, ensure_ascii=False)
        fh.write("\n")
