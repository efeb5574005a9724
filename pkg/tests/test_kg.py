"""Triple store: ingestion, neighborhood recall, linearization."""

import numpy as np
import pytest

from pkchat.kg import EntityIndex, Triple, TripleStore, linearize, load_triples

TSV = "basalt\tis_a\tigneous rock\nbasalt\tformed_by\tlava cooling\ngranite\tis_a\tigneous rock\n"


@pytest.fixture
def tsv_path(tmp_path):
    path = tmp_path / "fixture.tsv"
    path.write_text(TSV, encoding="utf-8")
    return path


def test_load_tsv_counts(tsv_path):
    store = load_triples(tsv_path)
    assert len(store) == 3


def test_load_dedups_case_insensitively(tmp_path):
    path = tmp_path / "dup.tsv"
    path.write_text(TSV + "Basalt\tis_a\tIgneous Rock\n", encoding="utf-8")
    assert len(load_triples(path)) == 3


def test_load_rejects_malformed_row_with_line_number(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("a\tb\tc\nbad row without tabs\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":2"):
        load_triples(path)


def test_load_empty_file_gives_empty_store(tmp_path, caplog):
    path = tmp_path / "empty.tsv"
    path.write_text("", encoding="utf-8")
    assert len(load_triples(path)) == 0


def test_load_ntriples_subset(tmp_path):
    path = tmp_path / "triples.nt"
    path.write_text(
        '<http://ex/Basalt> <http://ex/is_a> <http://ex/Igneous_rock> .\n'
        '<http://ex/Basalt> <http://ex/formed_by> "lava cooling" .\n',
        encoding="utf-8")
    store = load_triples(path, fmt="ntriples")
    assert len(store) == 2
    edges = store.neighborhood("basalt")
    assert {e.neighbor.lower() for e in edges} == {"igneous rock", "lava cooling"}


def test_neighborhood_outbound(fixture_kg):
    edges = fixture_kg.neighborhood("basalt")
    assert [(e.direction, e.relation, e.neighbor) for e in edges] == [
        ("out", "formed_by", "lava cooling"),
        ("out", "is_a", "igneous rock"),
    ]


def test_neighborhood_inbound(fixture_kg):
    edges = fixture_kg.neighborhood("igneous rock")
    assert [(e.direction, e.relation, e.neighbor) for e in edges] == [
        ("in", "is_a", "basalt"),
        ("in", "is_a", "granite"),
    ]


def test_neighborhood_unknown_entity_is_empty(fixture_kg):
    assert fixture_kg.neighborhood("unknown") == []


def test_neighborhood_outbound_only_flag(fixture_kg):
    assert fixture_kg.neighborhood("igneous rock", include_inbound=False) == []


def test_linearize_directions(fixture_kg):
    edges = fixture_kg.neighborhood("basalt")
    lines = linearize(edges, "basalt")
    assert lines == ["basalt formed_by lava cooling", "basalt is_a igneous rock"]
    inbound = fixture_kg.neighborhood("igneous rock")
    assert linearize(inbound, "igneous rock") == [
        "basalt is_a igneous rock", "granite is_a igneous rock"]


def test_linearize_empty():
    assert linearize([], "x") == []


def _random_store(seed, n=50):
    rng = np.random.default_rng(seed)
    entities = [f"e{i}" for i in range(12)]
    relations = ["r0", "r1", "r2"]
    triples = []
    while len({t.key() for t in triples}) < n:
        triples.append(Triple(
            entities[int(rng.integers(len(entities)))],
            relations[int(rng.integers(len(relations)))],
            entities[int(rng.integers(len(entities)))],
        ))
    return TripleStore(triples)


def test_neighborhood_matches_linear_scan_on_random_store():
    store = _random_store(seed=17, n=50)
    for entity in store.entity_names():
        got = {(e.direction, e.relation.lower(), e.neighbor.lower())
               for e in store.neighborhood(entity)}
        want = set()
        for t in store.triples:
            if t.head.lower() == entity.lower():
                want.add(("out", t.relation.lower(), t.tail.lower()))
            if t.tail.lower() == entity.lower():
                want.add(("in", t.relation.lower(), t.head.lower()))
        assert got == want


def test_every_triple_appears_in_exactly_two_neighborhoods():
    store = _random_store(seed=23, n=50)
    counts = {t.key(): 0 for t in store.triples}
    for entity in store.entity_names():
        for e in store.neighborhood(entity):
            if e.direction == "out":
                counts[(entity.lower(), e.relation.lower(), e.neighbor.lower())] += 1
            else:
                counts[(e.neighbor.lower(), e.relation.lower(), entity.lower())] += 1
    assert all(c == 2 for c in counts.values())


def test_dump_load_idempotent(tmp_path, fixture_kg):
    p1 = tmp_path / "a.tsv"
    p2 = tmp_path / "b.tsv"
    fixture_kg.dump(p1)
    once = load_triples(p1)
    once.dump(p2)
    twice = load_triples(p2)
    assert {t.key() for t in once.triples} == {t.key() for t in twice.triples}
    assert {t.key() for t in once.triples} == {t.key() for t in fixture_kg.triples}


def test_entity_index_lookup_and_match(fixture_kg):
    index = EntityIndex(fixture_kg)
    assert index.lookup(["basalt"]) == "basalt"
    assert index.lookup(["igneous", "rock"]) == "igneous rock"
    assert index.lookup(["nope"]) is None
    assert index.match_length(["igneous", "rock", "forms"], 0) == 2
    assert index.match_length(["forms"], 0) == 0
