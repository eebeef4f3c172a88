import random
from pathlib import Path

import pytest

from struedit.chain import load_templates
from struedit.store import EditOperation, FactTriple, build_structure

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

WWE_ORIGINAL = [
    FactTriple.of("WWE Velocity", "created by", "Vince McMahon"),
    FactTriple.of("Vince McMahon", "spouse", "Linda McMahon"),
]
WWE_EDIT = EditOperation.of("WWE Velocity", "created by", "Stan Lee", "Vince McMahon")
WWE_SUPPORT = FactTriple.of("Stan Lee", "spouse", "Joan Lee")
WWE_CHAIN_TEXT = "(WWE Velocity ; created by ; Vince McMahon)\n(Vince McMahon ; spouse ; Linda McMahon)"
WWE_QUESTION = "Who is the spouse of the creator of WWE Velocity?"


def random_functional_structure(rng: random.Random, n_entities: int = 50, max_rels: int = 4, n_relations: int = 8):
    """Every (subject, relation) has exactly one object."""
    entities = [f"entity {i}" for i in range(n_entities)]
    relations = [f"relation {j}" for j in range(n_relations)]
    triples = []
    for e in entities:
        for r in rng.sample(relations, rng.randint(0, max_rels)):
            triples.append(FactTriple.of(e, r, rng.choice(entities)))
    return triples


def random_walk(rng: random.Random, triples, hops: int):
    """A length-``hops`` walk over ``triples`` or None if it dead-ends."""
    by_subject = {}
    for t in triples:
        by_subject.setdefault(t.subject, []).append(t)
    starts = sorted(by_subject)
    if not starts:
        return None
    node = rng.choice(starts)
    walk = []
    for _ in range(hops):
        options = by_subject.get(node)
        if not options:
            return None
        step = rng.choice(sorted(options))
        walk.append(step)
        node = step.object
    return walk


@pytest.fixture
def templates():
    return load_templates()


@pytest.fixture
def wwe_original():
    return build_structure(WWE_ORIGINAL)


@pytest.fixture
def wwe_edited():
    from struedit.store import apply_edits

    return apply_edits(build_structure(WWE_ORIGINAL + [WWE_SUPPORT]), [WWE_EDIT])


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    def log(criterion: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
