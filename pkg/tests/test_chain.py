import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from struedit.chain import (
    REPROMPT_CHAIN,
    ReasoningChain,
    ReasoningSkeleton,
    extract_skeleton,
    generate_chain,
    load_templates,
    parse_chain_text,
    parse_skeleton_text,
    render_chain,
    render_skeleton,
)
from struedit.errors import MalformedChain, MalformedSkeleton
from struedit.oracle import ScriptedOracle, record_transcript
from struedit.store import EntityId, FactTriple, RelationLabel

from conftest import WWE_CHAIN_TEXT, WWE_QUESTION


def test_default_templates_have_three_demos_each(templates):
    assert len(templates.chain_generation_demos) == 3
    assert len(templates.extraction_demos) == 3
    hops = sorted(len(parse_chain_text(chain)) for _, chain in templates.chain_generation_demos)
    assert hops == [2, 3, 4]
    for chain_text, skel_text in templates.extraction_demos:
        steps = parse_chain_text(chain_text)
        assert parse_skeleton_text(skel_text) == extract_skeleton(ReasoningChain(tuple(steps)))


def test_templates_from_directory(tmp_path):
    (tmp_path / "chain_generation.txt").write_text("sys A\n---\nQ1\n=>\n(a ; r ; b)\n")
    (tmp_path / "skeleton_extraction.txt").write_text("sys B\n---\n(a ; r ; b)\n=>\nentity: a\nrelations: r\n")
    t = load_templates(tmp_path)
    assert t.chain_generation_system == "sys A"
    assert t.chain_generation_demos == (("Q1", "(a ; r ; b)"),)
    assert t.extraction_demos == (("(a ; r ; b)", "entity: a\nrelations: r"),)


def test_templates_need_demos(tmp_path):
    (tmp_path / "chain_generation.txt").write_text("only system text\n")
    (tmp_path / "skeleton_extraction.txt").write_text("sys\n---\nx\n=>\ny\n")
    with pytest.raises(ValueError):
        load_templates(tmp_path)


def test_parse_chain_single():
    assert parse_chain_text("(a ; r ; b)") == [FactTriple.of("a", "r", "b")]


def test_parse_chain_noise_and_whitespace():
    assert parse_chain_text("noise\n( a ;r; b )\n(b ; r2 ; c)") == [
        FactTriple.of("a", "r", "b"),
        FactTriple.of("b", "r2", "c"),
    ]


def test_parse_chain_keeps_parentheses_in_names():
    assert parse_chain_text("(Paris (city) ; country ; France)") == [FactTriple.of("Paris (city)", "country", "France")]


@pytest.mark.parametrize("raw", ["", "just prose", "(a ; b)", "(a ; ; b)"])
def test_parse_chain_rejects(raw):
    with pytest.raises(MalformedChain):
        parse_chain_text(raw)


def test_generate_chain_wwe(templates):
    oracle = ScriptedOracle().add(WWE_QUESTION, WWE_CHAIN_TEXT)
    chain = generate_chain(WWE_QUESTION, oracle, templates)
    assert len(chain.steps) == 2
    assert chain.raw_text == WWE_CHAIN_TEXT
    assert chain.linkage_breaks == []


def test_generate_chain_reprompts_once(templates):
    oracle = record_transcript(ScriptedOracle(fallback="I think it is Linda.").add(REPROMPT_CHAIN, "(a ; r ; b)"))
    chain = generate_chain("q?", oracle, templates)
    assert chain.steps == (FactTriple.of("a", "r", "b"),)
    assert oracle.call_count == 2
    assert oracle.transcript[1][0].user_text.endswith(REPROMPT_CHAIN)


def test_generate_chain_fails_after_two_prose_replies(templates):
    oracle = record_transcript(ScriptedOracle(fallback="Sorry, no idea."))
    with pytest.raises(MalformedChain):
        generate_chain("q?", oracle, templates)
    assert oracle.call_count == 2


def test_generate_chain_four_hop_roundtrip(templates):
    path = [FactTriple.of(f"n{i}", f"rel {i}", f"n{i + 1}") for i in range(4)]
    oracle = ScriptedOracle(fallback=render_chain(path))
    chain = generate_chain("four hops?", oracle, templates)
    assert list(chain.steps) == path
    assert chain.linkage_breaks == []


def test_linkage_break_recorded_not_fatal(templates):
    oracle = ScriptedOracle(fallback="(a ; r ; b)\n(c ; s ; d)")
    chain = generate_chain("q", oracle, templates)
    assert chain.linkage_breaks == [1]


def test_extract_skeleton_wwe_deterministic():
    chain = ReasoningChain(tuple(parse_chain_text(WWE_CHAIN_TEXT)))
    sk = extract_skeleton(chain)
    assert sk.source_entity == EntityId.of("WWE Velocity")
    assert sk.relations == (RelationLabel.of("created by"), RelationLabel.of("spouse"))
    assert sk.hop_count == 2


def test_extract_skeleton_single_step():
    sk = extract_skeleton(ReasoningChain((FactTriple.of("a", "r", "b"),)))
    assert (sk.source_entity.label, [r.label for r in sk.relations], sk.hop_count) == ("a", ["r"], 1)


def test_extract_llm_matches_deterministic(templates):
    chain = ReasoningChain(tuple(parse_chain_text(WWE_CHAIN_TEXT)))
    det = extract_skeleton(chain, mode="deterministic")
    oracle = record_transcript(ScriptedOracle(fallback=render_skeleton(det)))
    assert extract_skeleton(chain, oracle, templates, mode="llm") == det
    assert oracle.call_count == 1
    assert "Chain:\n" + render_chain(chain.steps) + "\nSkeleton:" in oracle.transcript[0][0].user_text


def test_extract_llm_reprompt_then_fail(templates):
    chain = ReasoningChain((FactTriple.of("a", "r", "b"),))
    oracle = record_transcript(ScriptedOracle(fallback="no structure here"))
    with pytest.raises(MalformedSkeleton):
        extract_skeleton(chain, oracle, templates, mode="llm")
    assert oracle.call_count == 2


def test_parse_skeleton_wwe():
    sk = parse_skeleton_text("entity: WWE Velocity\nrelations: created by -> spouse")
    assert sk == ReasoningSkeleton.of("WWE Velocity", ["created by", "spouse"])
    assert sk.source_entity.display == "WWE Velocity"


def test_parse_skeleton_single():
    assert parse_skeleton_text("entity: a\nrelations: r").hop_count == 1


@pytest.mark.parametrize("raw", ["relations: r", "entity: a", "entity: a\nrelations: r -> -> s", "entity: \nrelations: r"])
def test_parse_skeleton_rejects(raw):
    with pytest.raises(MalformedSkeleton):
        parse_skeleton_text(raw)


# ---------------------------------------------------------------------------
# properties

label = st.text(alphabet="abcdefgh XYZ-.'", min_size=1, max_size=12).filter(lambda s: any(c.isalpha() for c in s))


@st.composite
def chains(draw):
    n = draw(st.integers(1, 5))
    ents = [draw(label) for _ in range(n + 1)]
    rels = [draw(label) for _ in range(n)]
    return [FactTriple.of(ents[i], rels[i], ents[i + 1]) for i in range(n)]


@settings(max_examples=80, deadline=None)
@given(chains())
def test_render_parse_roundtrip(steps):
    assert parse_chain_text(render_chain(steps)) == steps


@settings(max_examples=80, deadline=None)
@given(chains())
def test_skeleton_drops_every_non_source_entity(steps):
    chain = ReasoningChain(tuple(steps))
    sk = extract_skeleton(chain)
    assert sk.hop_count == len(steps)
    assert sk == extract_skeleton(chain)
    mentioned = {sk.source_entity.label}
    for step in steps:
        if step.object != steps[0].subject:
            assert step.object not in mentioned
    # nothing but the source and relation labels survive
    assert set(vars(sk)) == {"source_entity", "relations"}
