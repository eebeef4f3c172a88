"""Immutable triple store with a subject -> relation -> objects index.

Edits never mutate a structure in place; ``apply_edits`` returns a new one so
the same base knowledge can be shared across many edit memories.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .errors import MalformedTriple

logger = logging.getLogger(__name__)

_WS = re.compile(r"\s+")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize(text: str) -> str:
    """Canonical key: lowercase, collapsed whitespace, no surrounding punctuation."""
    text = _WS.sub(" ", text.lower()).strip()
    start, end = 0, len(text)
    while start < end and (_is_punct(text[start]) or text[start].isspace()):
        start += 1
    while end > start and (_is_punct(text[end - 1]) or text[end - 1].isspace()):
        end -= 1
    return text[start:end]


@dataclass(frozen=True, order=True)
class EntityId:
    label: str
    display: str = field(compare=False)

    @classmethod
    def of(cls, text: str | EntityId) -> EntityId:
        if isinstance(text, cls):
            return text
        text = str(text)
        return cls(normalize(text), _WS.sub(" ", text).strip())

    def __str__(self) -> str:
        return self.display


@dataclass(frozen=True, order=True)
class RelationLabel:
    label: str
    display: str = field(compare=False)

    @classmethod
    def of(cls, text: str | RelationLabel) -> RelationLabel:
        if isinstance(text, cls):
            return text
        text = str(text)
        return cls(normalize(text), _WS.sub(" ", text).strip())

    def __str__(self) -> str:
        return self.display


@dataclass(frozen=True, order=True)
class FactTriple:
    subject: EntityId
    relation: RelationLabel
    object: EntityId

    def __post_init__(self) -> None:
        for name in ("subject", "relation", "object"):
            if not getattr(self, name).label:
                raise MalformedTriple(f"empty {name} in triple {self.as_text()!r}")

    @classmethod
    def of(cls, subject: str | EntityId, relation: str | RelationLabel, obj: str | EntityId) -> FactTriple:
        return cls(EntityId.of(subject), RelationLabel.of(relation), EntityId.of(obj))

    def as_text(self) -> tuple[str, str, str]:
        return (self.subject.display, self.relation.display, self.object.display)

    def __str__(self) -> str:
        return "({} ; {} ; {})".format(*self.as_text())


@dataclass(frozen=True)
class EditOperation:
    """Counterfactual rewrite of ``(subject, relation)`` to ``new_object``."""

    subject: EntityId
    relation: RelationLabel
    new_object: EntityId
    old_object: EntityId | None = None

    def __post_init__(self) -> None:
        if not self.subject.label or not self.relation.label or not self.new_object.label:
            raise MalformedTriple(f"edit with empty field: {self}")
        if self.old_object is not None and self.old_object == self.new_object:
            raise MalformedTriple(f"edit does not change the object: {self}")

    @classmethod
    def of(cls, subject: str, relation: str, new_object: str, old_object: str | None = None) -> EditOperation:
        return cls(
            EntityId.of(subject),
            RelationLabel.of(relation),
            EntityId.of(new_object),
            EntityId.of(old_object) if old_object is not None else None,
        )

    def as_triple(self) -> FactTriple:
        return FactTriple(self.subject, self.relation, self.new_object)


@dataclass(frozen=True)
class ReasoningPath:
    hops: tuple[FactTriple, ...] = ()

    def __post_init__(self) -> None:
        for prev, cur in zip(self.hops, self.hops[1:]):
            if cur.subject != prev.object:
                raise ValueError(f"broken path at {cur}: expected subject {prev.object}")

    def __len__(self) -> int:
        return len(self.hops)

    def __iter__(self) -> Iterator[FactTriple]:
        return iter(self.hops)

    @property
    def answer(self) -> EntityId | None:
        return self.hops[-1].object if self.hops else None

    @property
    def relations(self) -> tuple[RelationLabel, ...]:
        return tuple(h.relation for h in self.hops)


class KnowledgeStructure:
    """Read-only indexed triple set.

    ``out_index`` maps subject -> relation -> objects (sorted by label,
    duplicate-free). ``entity_catalog`` lists every subject or object once,
    sorted by label. When the same label arrives with several surface forms the
    lexicographically smallest display wins, so construction is
    order-independent.
    """

    __slots__ = ("triples", "out_index", "entity_catalog", "_entities", "_relations")

    def __init__(self, triples: Iterable[FactTriple] = ()):
        displays: dict[str, str] = {}
        rel_displays: dict[str, str] = {}
        collected: set[FactTriple] = set()
        for t in triples:
            collected.add(t)
            for ent in (t.subject, t.object):
                cur = displays.get(ent.label)
                if cur is None or ent.display < cur:
                    displays[ent.label] = ent.display
            cur = rel_displays.get(t.relation.label)
            if cur is None or t.relation.display < cur:
                rel_displays[t.relation.label] = t.relation.display

        entities = {label: EntityId(label, disp) for label, disp in displays.items()}
        relations = {label: RelationLabel(label, disp) for label, disp in rel_displays.items()}

        grouped: dict[EntityId, dict[RelationLabel, set[EntityId]]] = {}
        canonical: set[FactTriple] = set()
        for t in collected:
            s, r, o = entities[t.subject.label], relations[t.relation.label], entities[t.object.label]
            canonical.add(FactTriple(s, r, o))
            grouped.setdefault(s, {}).setdefault(r, set()).add(o)

        index = {
            s: MappingProxyType({r: tuple(sorted(objs)) for r, objs in sorted(by_rel.items())})
            for s, by_rel in sorted(grouped.items())
        }
        self.triples: frozenset[FactTriple] = frozenset(canonical)
        self.out_index: Mapping[EntityId, Mapping[RelationLabel, tuple[EntityId, ...]]] = MappingProxyType(index)
        self.entity_catalog: tuple[EntityId, ...] = tuple(sorted(entities.values()))
        self._entities = entities
        self._relations = relations

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeStructure):
            return NotImplemented
        return self.triples == other.triples

    def __hash__(self) -> int:
        return hash(self.triples)

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, item: object) -> bool:
        return item in self.triples

    def __repr__(self) -> str:
        return f"KnowledgeStructure({len(self.triples)} triples, {len(self.entity_catalog)} entities)"

    def lookup_entity(self, entity: str | EntityId) -> EntityId | None:
        """Return the stored entity whose normalized label matches, if any."""
        return self._entities.get(EntityId.of(entity).label)

    def has_entity(self, entity: str | EntityId) -> bool:
        return EntityId.of(entity).label in self._entities

    def sorted_triples(self) -> list[FactTriple]:
        return sorted(self.triples)


def build_structure(triples: Iterable[FactTriple]) -> KnowledgeStructure:
    return KnowledgeStructure(triples)


def apply_edits(structure: KnowledgeStructure, edits: Iterable[EditOperation]) -> KnowledgeStructure:
    """Replace every object under each edit's (subject, relation) with its new object.

    Edits apply in order, so a later edit on the same key wins.
    """
    by_key: dict[tuple[EntityId, RelationLabel], set[FactTriple]] = {}
    for t in structure.triples:
        by_key.setdefault((t.subject, t.relation), set()).add(t)
    touched = False
    for edit in edits:
        touched = True
        by_key[(edit.subject, edit.relation)] = {edit.as_triple()}
    if not touched:
        return structure
    return KnowledgeStructure(t for group in by_key.values() for t in group)


def relations_of(structure: KnowledgeStructure, entity: str | EntityId) -> list[RelationLabel]:
    stored = structure.lookup_entity(entity)
    if stored is None:
        return []
    return list(structure.out_index.get(stored, {}).keys())


def objects_of(
    structure: KnowledgeStructure, entity: str | EntityId, relation: str | RelationLabel
) -> list[EntityId]:
    stored = structure.lookup_entity(entity)
    if stored is None:
        return []
    return list(structure.out_index.get(stored, {}).get(RelationLabel.of(relation), ()))


def brute_force_paths(structure: KnowledgeStructure, source: str | EntityId, hops: int) -> list[ReasoningPath]:
    """Enumerate every length-``hops`` path from ``source``.

    Testing oracle for path inference. Paths come out in lexicographic order of
    (relation, object) at each hop.
    """
    if hops < 1:
        raise ValueError("hops must be >= 1")
    start = structure.lookup_entity(source)
    if start is None:
        return []
    results: list[ReasoningPath] = []

    def walk(node: EntityId, prefix: list[FactTriple]) -> None:
        if len(prefix) == hops:
            results.append(ReasoningPath(tuple(prefix)))
            return
        for rel, objs in structure.out_index.get(node, {}).items():
            for obj in objs:
                prefix.append(FactTriple(node, rel, obj))
                walk(obj, prefix)
                prefix.pop()

    walk(start, [])
    return results


def load_triples(path: str | Path) -> list[FactTriple]:
    """Read ``subject<TAB>relation<TAB>object`` lines; ``#`` lines are comments."""
    triples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedTriple(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            try:
                triples.append(FactTriple.of(*parts))
            except MalformedTriple as exc:
                raise MalformedTriple(f"{path}:{lineno}: {exc}") from None
    return triples


def save_triples(path: str | Path, triples: Iterable[FactTriple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in sorted(triples):
            fh.write("\t".join(t.as_text()) + "\n")
