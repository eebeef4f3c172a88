"""Edit memories: which knowledge and which rewrites a question gets to see."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..baseline import EditMemory
from ..store import KnowledgeStructure, apply_edits, build_structure
from .dataset import MultiHopCase

MEMORY_MODES = ("relevant_only", "full", "fixed_count")


@dataclass(frozen=True)
class MemorySpec:
    mode: str = "relevant_only"
    count: int | None = None
    full_includes_originals: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MEMORY_MODES:
            raise ValueError(f"unknown memory mode {self.mode!r}")
        if self.mode == "fixed_count" and (self.count is None or self.count < 1):
            raise ValueError("fixed_count needs a count >= 1")

    @classmethod
    def parse(cls, text: str, full_includes_originals: bool = True) -> MemorySpec:
        """Accepts ``relevant``, ``full`` or ``count:<n>``."""
        if text in ("relevant", "relevant_only"):
            return cls("relevant_only", None, full_includes_originals)
        if text == "full":
            return cls("full", None, full_includes_originals)
        if text.startswith("count:"):
            return cls("fixed_count", int(text.split(":", 1)[1]), full_includes_originals)
        raise ValueError(f"bad memory spec {text!r}; expected relevant, full or count:<n>")

    def describe(self) -> str:
        return f"count:{self.count}" if self.mode == "fixed_count" else self.mode


def sample_cases(cases, focus: MultiHopCase, n: int, seed: int) -> list[MultiHopCase]:
    """``n`` cases including ``focus``, drawn reproducibly per (seed, focus)."""
    others = [c for c in cases if c.case_id != focus.case_id]
    rng = random.Random(f"{seed}:{focus.case_id}")
    picked = rng.sample(others, min(n - 1, len(others)))
    return [focus, *picked]


def merged_structure(cases, include_originals: bool = True) -> tuple[KnowledgeStructure, EditMemory]:
    """Union of the cases' chains with every rewrite applied on top."""
    triples = []
    rewrites = []
    for case in cases:
        if include_originals:
            triples.extend(case.original_triples)
        triples.extend(case.edited_triples)
        rewrites.extend(case.rewrites)
    structure = apply_edits(build_structure(triples), rewrites)
    return structure, EditMemory.from_facts(rw.as_triple() for rw in rewrites)


def build_edit_memory(
    cases, focus: MultiHopCase, spec: MemorySpec, seed: int = 0
) -> tuple[KnowledgeStructure, EditMemory]:
    if spec.mode == "relevant_only":
        memory = EditMemory.from_facts(rw.as_triple() for rw in focus.rewrites)
        return build_structure(focus.edited_triples), memory
    if spec.mode == "full":
        return merged_structure(cases, spec.full_includes_originals)
    return merged_structure(sample_cases(cases, focus, spec.count, seed), spec.full_includes_originals)
