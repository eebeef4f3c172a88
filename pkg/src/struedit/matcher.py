"""Entity matching and relation selection against a knowledge structure.

Candidates are offered to the oracle with a two-line query: a selective
question naming the target, then ``c_1: <feature>, c_2: <feature>, ...``.
Exact normalized matches skip the oracle entirely.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Union

from .errors import DeadEnd, EntityNotFound, UnparseableSelection
from .oracle import Oracle, OracleRequest
from .store import EntityId, KnowledgeStructure, RelationLabel, normalize, relations_of

logger = logging.getLogger(__name__)

Candidate = Union[EntityId, RelationLabel]

SELECTION_SYSTEM = (
    "You pick the candidate that best matches the target. "
    "Reply with the candidate id only, for example c_2."
)

_SELECTION = re.compile(r"(?<![A-Za-z0-9_])c_(\d+)", re.IGNORECASE)


def _tokens(norm: str) -> set[str]:
    return {tok for tok in (normalize(t) for t in norm.split()) if tok}


def _trigrams(norm: str) -> Counter:
    padded = f" {norm} "
    return Counter(padded[i : i + 3] for i in range(len(padded) - 2))


def lexical_score(a: str, b: str, token_weight: float = 0.5, trigram_weight: float = 0.5) -> float:
    """Weighted token-set Jaccard plus character-trigram Dice, in [0, 1].

    Both texts are normalized first, so case and surrounding punctuation do
    not matter. Trigrams are taken over the text padded with one space on each
    side, which gives every non-empty string at least one trigram.
    """
    na, nb = normalize(a), normalize(b)
    if not na or not nb:
        return 0.0
    ta, tb = _tokens(na), _tokens(nb)
    jaccard = len(ta & tb) / len(ta | tb) if ta | tb else 0.0
    ga, gb = _trigrams(na), _trigrams(nb)
    dice = 2 * sum((ga & gb).values()) / (sum(ga.values()) + sum(gb.values()))
    return token_weight * jaccard + trigram_weight * dice


@dataclass(frozen=True)
class CandidateQuery:
    target: str
    candidates: tuple[str, ...]
    kind: str = "entity"

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ValueError("candidate query needs at least one candidate")
        if self.kind not in ("entity", "relation"):
            raise ValueError(f"unknown query kind {self.kind!r}")

    @property
    def prefix_question(self) -> str:
        return f"Which candidate {self.kind} best matches the {self.kind} {self.target}?"

    @property
    def indexed(self) -> list[tuple[int, str]]:
        return list(enumerate(self.candidates, 1))


def render_candidate_query(query: CandidateQuery) -> str:
    description = ", ".join(f"c_{i}: {feature}" for i, feature in query.indexed)
    return f"{query.prefix_question}\n{description}"


def parse_selection(reply: str, candidates) -> int:
    """Return the 1-based index picked by ``reply``.

    The first in-range ``c_<n>`` wins. Without one, the candidate most
    lexically similar to the whole reply is chosen (lowest index on ties).
    """
    if not candidates:
        raise ValueError("no candidates")
    if not reply or not reply.strip():
        raise UnparseableSelection("empty selection reply")
    for m in _SELECTION.finditer(reply):
        idx = int(m.group(1))
        if 1 <= idx <= len(candidates):
            return idx
    features = [str(c) for c in candidates]
    best, best_score = 1, -1.0
    for i, feature in enumerate(features, 1):
        score = lexical_score(feature, reply)
        if score > best_score:
            best, best_score = i, score
    return best


@dataclass(frozen=True)
class MatchResult:
    chosen: Candidate
    chosen_index: int
    method: str
    score: float = 1.0


@dataclass(frozen=True)
class MatcherConfig:
    strategy: str = "oracle"
    prefilter_top_k: int = 20
    min_lexical_score: float = 0.0
    token_jaccard_weight: float = 0.5
    trigram_dice_weight: float = 0.5

    def __post_init__(self) -> None:
        if self.strategy not in ("oracle", "lexical"):
            raise ValueError(f"unknown matcher strategy {self.strategy!r}")
        if self.prefilter_top_k < 1:
            raise ValueError("prefilter_top_k must be positive")
        if not 0.0 <= self.min_lexical_score <= 1.0:
            raise ValueError("min_lexical_score must lie in [0, 1]")
        if abs(self.token_jaccard_weight + self.trigram_dice_weight - 1.0) > 1e-9:
            raise ValueError("similarity weights must sum to 1")

    def score(self, a: str, b: str) -> float:
        return lexical_score(a, b, self.token_jaccard_weight, self.trigram_dice_weight)


def rank_candidates(target: str, candidates, config: MatcherConfig, top_k: int | None = None):
    """Sort by descending score, ties by original order; optionally truncate."""
    scored = [(config.score(target, c.display), i, c) for i, c in enumerate(candidates)]
    scored.sort(key=lambda item: (-item[0], item[1]))
    if top_k is not None:
        scored = scored[:top_k]
    return [(c, s) for s, _, c in scored]


def _ask_oracle(target: Candidate, ranked, kind: str, oracle: Oracle) -> MatchResult:
    query = CandidateQuery(target.display, tuple(c.display for c, _ in ranked), kind)
    reply = oracle.complete(
        OracleRequest(render_candidate_query(query), SELECTION_SYSTEM, max_output_tokens=16)
    ).text
    idx = parse_selection(reply, query.candidates)
    return MatchResult(ranked[idx - 1][0], idx, "oracle", 1.0)


def match_entity(
    target: str | EntityId, structure: KnowledgeStructure, oracle: Oracle | None, config: MatcherConfig
) -> MatchResult:
    target = EntityId.of(target)
    if not structure.entity_catalog:
        raise EntityNotFound(f"{target.display!r}: knowledge structure is empty")
    exact = structure.lookup_entity(target)
    if exact is not None:
        return MatchResult(exact, 1, "exact", 1.0)
    ranked = rank_candidates(target.display, structure.entity_catalog, config, config.prefilter_top_k)
    if config.strategy == "oracle":
        if oracle is None:
            raise ValueError("oracle strategy needs an oracle")
        return _ask_oracle(target, ranked, "entity", oracle)
    best, score = ranked[0]
    if score < config.min_lexical_score:
        raise EntityNotFound(
            f"{target.display!r}: best candidate {best.display!r} scores {score:.3f} < {config.min_lexical_score}"
        )
    return MatchResult(best, 1, "lexical", score)


def select_relation(
    target: str | RelationLabel,
    current_entity: EntityId,
    structure: KnowledgeStructure,
    oracle: Oracle | None,
    config: MatcherConfig,
) -> MatchResult:
    target = RelationLabel.of(target)
    candidates = relations_of(structure, current_entity)
    if not candidates:
        raise DeadEnd(f"{current_entity.display!r} has no outgoing relations (wanted {target.display!r})")
    for i, rel in enumerate(candidates, 1):
        if rel == target:
            return MatchResult(rel, i, "exact", 1.0)
    if config.strategy == "oracle":
        if oracle is None:
            raise ValueError("oracle strategy needs an oracle")
        return _ask_oracle(target, [(c, 0.0) for c in candidates], "relation", oracle)
    ranked = rank_candidates(target.display, candidates, config)
    best, score = ranked[0]
    return MatchResult(best, candidates.index(best) + 1, "lexical", score)
