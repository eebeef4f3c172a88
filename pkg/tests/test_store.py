import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from struedit.errors import MalformedTriple
from struedit.store import (
    EditOperation,
    EntityId,
    FactTriple,
    RelationLabel,
    apply_edits,
    brute_force_paths,
    build_structure,
    load_triples,
    normalize,
    objects_of,
    relations_of,
    save_triples,
)

from conftest import WWE_EDIT, WWE_ORIGINAL, WWE_SUPPORT


def reference_count_paths(triples, source_label, hops):
    """Independent recursive count over the flat triple list."""
    if hops == 0:
        return 1
    return sum(
        reference_count_paths(triples, t.object.label, hops - 1) for t in triples if t.subject.label == source_label
    )


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("  WWE   Velocity ", "wwe velocity"),
        ("W.W.E. Velocity", "w.w.e. velocity"),
        ('"Stan Lee".', "stan lee"),
        ("\tSpouse\nOf ", "spouse of"),
        ("...", ""),
    ],
)
def test_normalize(raw, expected):
    assert normalize(raw) == expected


def test_entity_equality_is_by_label():
    assert EntityId.of("Stan Lee") == EntityId.of("  stan   LEE ")
    assert EntityId.of("Stan Lee").display == "Stan Lee"
    assert RelationLabel.of("Created By") == RelationLabel.of("created by")


def test_triple_rejects_empty_fields():
    with pytest.raises(MalformedTriple):
        FactTriple.of("a", "", "b")
    with pytest.raises(MalformedTriple):
        FactTriple.of("!!", "r", "b")


def test_edit_rejects_noop():
    with pytest.raises(MalformedTriple):
        EditOperation.of("a", "r", "b", old_object="B")


def test_build_empty():
    s = build_structure([])
    assert len(s) == 0
    assert s.entity_catalog == ()


def test_build_wwe_chain():
    s = build_structure(WWE_ORIGINAL)
    assert len(s) == 2
    # three distinct entities: the object of hop 1 is the subject of hop 2
    assert len(s.entity_catalog) == 3
    key = EntityId.of("wwe velocity")
    assert s.out_index[key][RelationLabel.of("created by")] == (EntityId.of("vince mcmahon"),)


def test_build_collapses_duplicates_against_set_reference():
    rng = random.Random(7)
    base = [FactTriple.of(f"e{rng.randrange(30)}", f"r{rng.randrange(5)}", f"x{i}") for i in range(90)]
    triples = base + rng.sample(base, 10)
    rng.shuffle(triples)
    s = build_structure(triples)
    reference = {(t.subject.label, t.relation.label, t.object.label) for t in triples}
    assert len(reference) == 90
    assert len(s) == 90
    assert {(t.subject.label, t.relation.label, t.object.label) for t in s.triples} == reference
    entities = {t.subject.label for t in triples} | {t.object.label for t in triples}
    assert [e.label for e in s.entity_catalog] == sorted(entities)


def test_build_rejects_empty_label_lines(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("a\tr\tb\nonly two\tfields\n", encoding="utf-8")
    with pytest.raises(MalformedTriple, match=":2:"):
        load_triples(path)


def test_apply_edit_replaces_object(wwe_original):
    edited = apply_edits(wwe_original, [WWE_EDIT])
    assert FactTriple.of("WWE Velocity", "created by", "Stan Lee") in edited
    assert FactTriple.of("WWE Velocity", "created by", "Vince McMahon") not in edited
    # input untouched
    assert FactTriple.of("WWE Velocity", "created by", "Vince McMahon") in wwe_original


def test_apply_no_edits_is_identity(wwe_original):
    assert apply_edits(wwe_original, []) == wwe_original


def test_later_edit_wins_against_naive_replay():
    rng = random.Random(3)
    triples = [FactTriple.of(f"s{i % 5}", f"r{i % 3}", f"o{i}") for i in range(20)]
    edits = [EditOperation.of(f"s{rng.randrange(5)}", f"r{rng.randrange(3)}", f"n{k}") for k in range(15)]
    edits.append(EditOperation.of("s1", "r1", "first"))
    edits.append(EditOperation.of("s1", "r1", "second"))
    naive = {}
    for t in triples:
        naive.setdefault((t.subject.label, t.relation.label), set()).add(t.object.label)
    for e in edits:
        naive[(e.subject.label, e.relation.label)] = {e.new_object.label}
    result = apply_edits(build_structure(triples), edits)
    flat = {(t.subject.label, t.relation.label, t.object.label) for t in result.triples}
    assert flat == {(s, r, o) for (s, r), objs in naive.items() for o in objs}
    assert objects_of(result, "s1", "r1") == [EntityId.of("second")]


def test_relations_of():
    s = build_structure(WWE_ORIGINAL)
    assert relations_of(s, EntityId.of("Vince McMahon")) == [RelationLabel.of("spouse")]
    assert relations_of(s, EntityId.of("Nobody")) == []
    assert relations_of(s, EntityId.of("Linda McMahon")) == []


def test_relations_of_sorted():
    rels = ["zeta", "alpha", "mid"]
    random.Random(1).shuffle(rels)
    s = build_structure([FactTriple.of("e", r, "x") for r in rels])
    assert [r.label for r in relations_of(s, "e")] == sorted(rels)


def test_objects_of(wwe_edited):
    assert objects_of(wwe_edited, "WWE Velocity", "created by") == [EntityId.of("Stan Lee")]
    assert objects_of(wwe_edited, "WWE Velocity", "spouse") == []
    fan = build_structure([FactTriple.of("a", "r", "zed"), FactTriple.of("a", "r", "bee")])
    assert [o.label for o in objects_of(fan, "a", "r")] == ["bee", "zed"]


def test_brute_force_absent_source(wwe_edited):
    assert brute_force_paths(wwe_edited, "Nowhere", 2) == []


def test_brute_force_wwe_edited(wwe_edited):
    paths = brute_force_paths(wwe_edited, "WWE Velocity", 2)
    assert len(paths) == 1
    assert paths[0].answer == EntityId.of("Joan Lee")


def test_brute_force_count_matches_reference():
    rng = random.Random(11)
    triples = [FactTriple.of(f"e{rng.randrange(6)}", f"r{rng.randrange(3)}", f"e{rng.randrange(6)}") for _ in range(20)]
    s = build_structure(triples)
    flat = list(s.triples)
    for i in range(6):
        got = brute_force_paths(s, f"e{i}", 3)
        assert len(got) == reference_count_paths(flat, f"e{i}", 3)
        keys = [tuple((h.relation.label, h.object.label) for h in p) for p in got]
        assert keys == sorted(keys)


def test_brute_force_rejects_zero_hops(wwe_edited):
    with pytest.raises(ValueError):
        brute_force_paths(wwe_edited, "WWE Velocity", 0)


def test_triple_file_roundtrip(tmp_path):
    path = tmp_path / "kg.tsv"
    path.write_text("# comment\nWWE Velocity\tcreated by\tVince McMahon\n\nVince McMahon\tspouse\tLinda McMahon\n")
    triples = load_triples(path)
    assert triples == WWE_ORIGINAL
    out = tmp_path / "out.tsv"
    save_triples(out, triples + [WWE_SUPPORT])
    assert build_structure(load_triples(out)) == build_structure(triples + [WWE_SUPPORT])


# ---------------------------------------------------------------------------
# properties

names = st.sampled_from([f"e{i}" for i in range(8)])
rels = st.sampled_from([f"r{i}" for i in range(3)])
triple_st = st.builds(FactTriple.of, names, rels, names)
edit_st = st.builds(EditOperation.of, names, rels, st.sampled_from([f"n{i}" for i in range(4)] + ["e0", "e1"]))


@settings(max_examples=60, deadline=None)
@given(st.lists(triple_st, max_size=25), st.lists(edit_st, max_size=6))
def test_apply_edits_idempotent(triples, edits):
    s = build_structure(triples)
    once = apply_edits(s, edits)
    assert apply_edits(once, edits) == once


@settings(max_examples=60, deadline=None)
@given(st.lists(triple_st, max_size=25), edit_st, names, st.integers(1, 3))
def test_ripple_correctness(triples, edit, source, hops):
    s = build_structure(triples)
    stale = [t for t in s.triples if t.subject == edit.subject and t.relation == edit.relation and t.object != edit.new_object]
    edited = apply_edits(s, [edit])
    for path in brute_force_paths(edited, source, hops):
        assert not any(hop in stale for hop in path)


@settings(max_examples=60, deadline=None)
@given(st.lists(triple_st, max_size=25), names, st.integers(1, 3), rels)
def test_edit_locality(triples, source, hops, rel):
    s = build_structure(triples)
    before = brute_force_paths(s, source, hops)
    # every subject that any (possibly partial) walk of < hops steps can reach
    frontier = reachable = {EntityId.of(source)}
    for _ in range(hops - 1):
        frontier = {o for e in frontier for objs in s.out_index.get(e, {}).values() for o in objs}
        reachable = reachable | frontier
    outside = [e for e in (EntityId.of(f"e{i}") for i in range(8)) if e not in reachable]
    if not outside:
        return
    edited = apply_edits(s, [EditOperation(outside[0], RelationLabel.of(rel), EntityId.of("elsewhere"))])
    assert brute_force_paths(edited, source, hops) == before


@settings(max_examples=60, deadline=None)
@given(st.lists(triple_st, max_size=30))
def test_index_coherence(triples):
    s = build_structure(triples)
    flat = {FactTriple(subj, rel, obj) for subj, by_rel in s.out_index.items() for rel, objs in by_rel.items() for obj in objs}
    assert flat == set(s.triples)
    for by_rel in s.out_index.values():
        for objs in by_rel.values():
            assert list(objs) == sorted(set(objs))
    catalog_labels = [e.label for e in s.entity_catalog]
    assert catalog_labels == sorted(set(catalog_labels))
    assert set(catalog_labels) == {t.subject.label for t in s.triples} | {t.object.label for t in s.triples}


@settings(max_examples=60, deadline=None)
@given(st.lists(triple_st, max_size=30), st.randoms(use_true_random=False))
def test_build_is_order_independent(triples, rnd):
    shuffled = list(triples)
    rnd.shuffle(shuffled)
    a, b = build_structure(triples), build_structure(shuffled)
    assert a == b
    assert a.entity_catalog == b.entity_catalog
    assert [e.display for e in a.entity_catalog] == [e.display for e in b.entity_catalog]
