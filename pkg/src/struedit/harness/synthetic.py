"""Synthetic multi-hop editing cases plus a faithful scripted oracle for them.

Each case has an original chain (what the model "remembers") and a single
counterfactual rewrite at a random hop, after which the chain continues
through fresh entities. The scripted oracle answers chain-generation prompts
with the ORIGINAL chain, so a correct answer proves outdated entities were
discarded.
"""

from __future__ import annotations

import random

from ..chain import ReasoningSkeleton, chain_prompt, extraction_prompt, render_chain, render_skeleton
from ..oracle import ScriptedOracle
from ..store import EditOperation, FactTriple
from .dataset import MultiHopCase

RELATIONS = (
    "created by",
    "spouse",
    "country of citizenship",
    "capital",
    "head of state",
    "founded by",
    "headquarters location",
    "employer",
    "continent",
    "official language",
    "place of birth",
    "chairperson",
)

_FIRST = ("Amber", "Brisk", "Cobalt", "Dune", "Ember", "Fable", "Granite", "Harbor", "Indigo", "Juniper")
_SECOND = ("Falls", "Works", "Hollow", "Ridge", "Crown", "Valley", "Point", "Forge", "Gate", "Haven")

QUESTION_FORMS = (
    "What is the {chain} {source}?",
    "Can you tell me the {chain} {source}?",
    "Name the {chain} {source}.",
)


def _name(rng: random.Random, namespace: str, case_no: int, k: int) -> str:
    return f"{rng.choice(_FIRST)} {rng.choice(_SECOND)} {namespace}{case_no}-{k}"


def questions_for(source: str, relations) -> tuple[str, ...]:
    chain = " of the ".join(reversed(relations)) + " of"
    return tuple(form.format(chain=chain, source=source) for form in QUESTION_FORMS)


def make_case(rng: random.Random, case_no: int, hops: int, namespace: str = "") -> MultiHopCase:
    relations = [rng.choice(RELATIONS) for _ in range(hops)]
    orig_entities = [_name(rng, namespace, case_no, k) for k in range(hops + 1)]
    edit_at = rng.randint(1, hops)
    new_entities = orig_entities[:edit_at] + [
        _name(rng, namespace, case_no, 100 + k) for k in range(edit_at, hops + 1)
    ]
    original = tuple(FactTriple.of(orig_entities[i], relations[i], orig_entities[i + 1]) for i in range(hops))
    edited = tuple(FactTriple.of(new_entities[i], relations[i], new_entities[i + 1]) for i in range(hops))
    rewrite = EditOperation.of(
        new_entities[edit_at - 1], relations[edit_at - 1], new_entities[edit_at], orig_entities[edit_at]
    )
    return MultiHopCase(
        case_id=f"{namespace}{case_no}",
        questions=questions_for(orig_entities[0], relations),
        gold_new_answer=new_entities[-1],
        answer_aliases=(),
        original_triples=original,
        edited_triples=edited,
        rewrites=(rewrite,),
        original_answer=orig_entities[-1],
    )


def generate_suite(per_hop: dict[int, int], seed: int = 0, namespace: str = "") -> list[MultiHopCase]:
    rng = random.Random(seed)
    cases = []
    case_no = 0
    for hops, count in sorted(per_hop.items()):
        for _ in range(count):
            cases.append(make_case(rng, case_no, hops, namespace))
            case_no += 1
    return cases


def distractor_cases(count: int, seed: int = 0, namespace: str = "distractor-") -> list[MultiHopCase]:
    """One-hop rewrite cases in their own namespace; meant for memory pools, not scoring."""
    return generate_suite({1: count}, seed, namespace)


def script_case(oracle: ScriptedOracle, case: MultiHopCase, templates) -> None:
    """Add rules answering every prompt the pipeline and baseline send for ``case``.

    Chain generation returns the original (pre-edit) chain, extraction
    restates its source and relations, and baseline questions get the gold
    answer.
    """
    chain_text = render_chain(case.original_triples)
    skeleton = ReasoningSkeleton(
        case.original_triples[0].subject, tuple(t.relation for t in case.original_triples)
    )
    for q in case.questions:
        oracle.add(chain_prompt(q, templates).rsplit("\n\n", 1)[-1], chain_text)
    oracle.add(extraction_prompt(chain_text, templates).rsplit("\n\n", 1)[-1], render_skeleton(skeleton))
    for q in case.questions:
        oracle.add(f"Question: {q.strip()}\nAnswer:", case.gold_new_answer)


def scripted_oracle_for(cases, templates, latency: float = 0.0) -> ScriptedOracle:
    oracle = ScriptedOracle(latency=latency)
    for case in cases:
        script_case(oracle, case, templates)
    return oracle
