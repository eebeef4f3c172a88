"""Reasoning-chain generation and skeleton extraction.

The oracle writes its (possibly outdated) chain of facts; only the source
entity and the relation sequence survive into the skeleton.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import MalformedChain, MalformedSkeleton, MalformedTriple
from .oracle import Oracle, OracleRequest
from .store import EntityId, FactTriple, RelationLabel

logger = logging.getLogger(__name__)

REPROMPT_CHAIN = "Answer ONLY with lines of the form (subject ; relation ; object)."
REPROMPT_SKELETON = "Answer ONLY with two lines: 'entity: <entity>' and 'relations: <r1> -> <r2> -> ...'."

_CHAIN_LINE = re.compile(r"^\s*\((.*)\)\s*$")
_ENTITY_LINE = re.compile(r"^\s*entity\s*:\s*(.*?)\s*$", re.IGNORECASE)
_RELATIONS_LINE = re.compile(r"^\s*relations\s*:\s*(.*?)\s*$", re.IGNORECASE)

DEMO_SEPARATOR = "---"
DEMO_IO_SEPARATOR = "=>"


@dataclass(frozen=True)
class ReasoningChain:
    steps: tuple[FactTriple, ...]
    raw_text: str = ""

    def __post_init__(self) -> None:
        if not self.steps:
            raise MalformedChain("a reasoning chain needs at least one step")

    @property
    def linkage_breaks(self) -> list[int]:
        """Indices ``i`` where ``steps[i].subject`` is not ``steps[i-1].object``."""
        return [i for i in range(1, len(self.steps)) if self.steps[i].subject != self.steps[i - 1].object]


@dataclass(frozen=True)
class ReasoningSkeleton:
    source_entity: EntityId
    relations: tuple[RelationLabel, ...]

    def __post_init__(self) -> None:
        if not self.source_entity.label:
            raise MalformedSkeleton("empty source entity")
        if not self.relations:
            raise MalformedSkeleton("skeleton needs at least one relation")
        if any(not r.label for r in self.relations):
            raise MalformedSkeleton("empty relation in skeleton")

    @classmethod
    def of(cls, source: str, relations: list[str] | tuple[str, ...]) -> ReasoningSkeleton:
        return cls(EntityId.of(source), tuple(RelationLabel.of(r) for r in relations))

    @property
    def hop_count(self) -> int:
        return len(self.relations)


@dataclass(frozen=True)
class PromptTemplateSet:
    chain_generation_system: str
    chain_generation_demos: tuple[tuple[str, str], ...]
    extraction_system: str
    extraction_demos: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.chain_generation_demos or not self.extraction_demos:
            raise ValueError("each template needs at least one demonstration")


def _parse_template_file(text: str, name: str) -> tuple[str, tuple[tuple[str, str], ...]]:
    blocks: list[list[str]] = [[]]
    for line in text.splitlines():
        if line.strip() == DEMO_SEPARATOR:
            blocks.append([])
        else:
            blocks[-1].append(line)
    system = "\n".join(blocks[0]).strip()
    demos = []
    for i, block in enumerate(blocks[1:], 1):
        stripped = [ln.strip() for ln in block]
        if DEMO_IO_SEPARATOR not in stripped:
            raise ValueError(f"{name}: demo {i} lacks a '{DEMO_IO_SEPARATOR}' line")
        cut = stripped.index(DEMO_IO_SEPARATOR)
        demo_in = "\n".join(block[:cut]).strip()
        demo_out = "\n".join(block[cut + 1 :]).strip()
        if demo_in and demo_out:
            demos.append((demo_in, demo_out))
    return system, tuple(demos)


def load_templates(directory: str | Path | None = None) -> PromptTemplateSet:
    """Load ``chain_generation.txt`` and ``skeleton_extraction.txt``.

    Each file holds the system text, then demos separated by ``---`` lines;
    inside a demo an ``=>`` line splits input from output. Without a directory
    the packaged defaults are used.
    """
    base = resources.files("struedit") / "prompts" if directory is None else Path(directory)
    chain_text = (base / "chain_generation.txt").read_text(encoding="utf-8")
    extract_text = (base / "skeleton_extraction.txt").read_text(encoding="utf-8")
    chain_system, chain_demos = _parse_template_file(chain_text, "chain_generation.txt")
    extract_system, extract_demos = _parse_template_file(extract_text, "skeleton_extraction.txt")
    return PromptTemplateSet(chain_system, chain_demos, extract_system, extract_demos)


# ---------------------------------------------------------------------------
# text formats


def render_chain(steps) -> str:
    return "\n".join(str(step) for step in steps)


def parse_chain_text(raw: str) -> list[FactTriple]:
    """Collect every ``(s ; r ; o)`` line in order; other lines are ignored."""
    steps = []
    for line in raw.splitlines():
        m = _CHAIN_LINE.match(line)
        if not m:
            continue
        fields = m.group(1).split(";")
        if len(fields) != 3:
            continue
        try:
            steps.append(FactTriple.of(*(f.strip() for f in fields)))
        except MalformedTriple:
            logger.debug("skipping chain line with empty field: %r", line)
    if not steps:
        raise MalformedChain(f"no '(subject ; relation ; object)' line in {raw[:200]!r}")
    return steps


def render_skeleton(skeleton: ReasoningSkeleton) -> str:
    rels = " -> ".join(r.display for r in skeleton.relations)
    return f"entity: {skeleton.source_entity.display}\nrelations: {rels}"


def parse_skeleton_text(raw: str) -> ReasoningSkeleton:
    entity = relations = None
    for line in raw.splitlines():
        if entity is None and (m := _ENTITY_LINE.match(line)):
            entity = m.group(1)
        elif relations is None and (m := _RELATIONS_LINE.match(line)):
            relations = m.group(1)
    if entity is None:
        raise MalformedSkeleton("missing 'entity:' line")
    if relations is None:
        raise MalformedSkeleton("missing 'relations:' line")
    parts = [p.strip() for p in relations.split("->")]
    if any(not RelationLabel.of(p).label for p in parts):
        raise MalformedSkeleton(f"empty relation in {relations!r}")
    return ReasoningSkeleton.of(entity, parts)


# ---------------------------------------------------------------------------
# prompting


def chain_prompt(question: str, templates: PromptTemplateSet) -> str:
    parts = [f"Question: {q}\nChain:\n{chain}" for q, chain in templates.chain_generation_demos]
    parts.append(f"Question: {question.strip()}\nChain:")
    return "\n\n".join(parts)


def extraction_prompt(chain_text: str, templates: PromptTemplateSet) -> str:
    parts = [f"Chain:\n{c}\nSkeleton:\n{s}" for c, s in templates.extraction_demos]
    parts.append(f"Chain:\n{chain_text}\nSkeleton:")
    return "\n\n".join(parts)


def generate_chain(question: str, oracle: Oracle, templates: PromptTemplateSet) -> ReasoningChain:
    if not question.strip():
        raise ValueError("question must be non-empty")
    user = chain_prompt(question, templates)
    raw = oracle.complete(OracleRequest(user, templates.chain_generation_system)).text
    try:
        steps = parse_chain_text(raw)
    except MalformedChain:
        logger.info("chain unparseable, re-prompting once")
        raw = oracle.complete(OracleRequest(f"{user}\n{REPROMPT_CHAIN}", templates.chain_generation_system)).text
        steps = parse_chain_text(raw)
    chain = ReasoningChain(tuple(steps), raw)
    if chain.linkage_breaks:
        logger.warning("chain linkage broken at steps %s for question %r", chain.linkage_breaks, question)
    return chain


def extract_skeleton(
    chain: ReasoningChain,
    oracle: Oracle | None = None,
    templates: PromptTemplateSet | None = None,
    mode: str = "deterministic",
) -> ReasoningSkeleton:
    """Keep the chain's source entity and relation sequence, drop every other entity.

    ``deterministic`` projects the parsed steps directly. ``llm`` asks the
    oracle to restate them, re-prompting once on an unparseable reply.
    """
    if mode == "deterministic":
        return ReasoningSkeleton(chain.steps[0].subject, tuple(s.relation for s in chain.steps))
    if mode != "llm":
        raise ValueError(f"unknown extraction mode {mode!r}")
    if oracle is None or templates is None:
        raise ValueError("llm extraction needs an oracle and templates")
    user = extraction_prompt(render_chain(chain.steps), templates)
    reply = oracle.complete(OracleRequest(user, templates.extraction_system)).text
    try:
        return parse_skeleton_text(reply)
    except MalformedSkeleton:
        logger.info("skeleton unparseable, re-prompting once")
        reply = oracle.complete(OracleRequest(f"{user}\n{REPROMPT_SKELETON}", templates.extraction_system)).text
        return parse_skeleton_text(reply)
