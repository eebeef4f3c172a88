"""IKE-style in-context editing baseline: retrieve edited facts, prepend, ask once."""

from __future__ import annotations

from dataclasses import dataclass

from .matcher import lexical_score
from .oracle import Oracle, OracleRequest
from .store import FactTriple

ANSWER_INSTRUCTION = "Answer with the entity name only."
BASELINE_SYSTEM = "Use the new facts below when they are relevant; they override what you remember."
DEFAULT_K = 4


def render_statement(fact: FactTriple) -> str:
    return f"{fact.subject.display} {fact.relation.display} {fact.object.display}."


@dataclass(frozen=True)
class EditMemory:
    facts: tuple[FactTriple, ...] = ()
    rendered: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.facts) != len(self.rendered):
            raise ValueError("facts and rendered statements must have equal length")

    @classmethod
    def from_facts(cls, facts) -> EditMemory:
        facts = tuple(facts)
        return cls(facts, tuple(render_statement(f) for f in facts))

    def __len__(self) -> int:
        return len(self.facts)


def retrieve_edits(question: str, memory: EditMemory, k: int = DEFAULT_K) -> list[str]:
    if k < 1:
        raise ValueError("k must be positive")
    scored = sorted(
        ((lexical_score(question, text), i) for i, text in enumerate(memory.rendered)),
        key=lambda item: (-item[0], item[1]),
    )
    return [memory.rendered[i] for _, i in scored[:k]]


def baseline_prompt(question: str, statements: list[str]) -> str:
    lines = []
    if statements:
        lines.append("New facts:")
        lines.extend(statements)
        lines.append("")
    lines.append(ANSWER_INSTRUCTION)
    lines.append(f"Question: {question.strip()}")
    lines.append("Answer:")
    return "\n".join(lines)


def baseline_answer(question: str, memory: EditMemory, oracle: Oracle, k: int = DEFAULT_K) -> str:
    statements = retrieve_edits(question, memory, k)
    reply = oracle.complete(OracleRequest(baseline_prompt(question, statements), BASELINE_SYSTEM, max_output_tokens=32))
    return reply.text.strip()
