import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontoforge.classify import EdgeKind, LabeledEdge, LabeledGraph
from ontoforge.errors import DataError, InvariantError
from ontoforge.ontology import (
    Concept,
    Ontology,
    collapse_identity,
    export,
    export_edge_tsv,
    import_json,
    lift_hierarchy,
    topological_order,
    transitive_reduction,
)


def identity(u, v):
    return LabeledEdge(min(u, v), max(u, v), 1, EdgeKind.IDENTITY)


def hier(u, v, parent):
    return LabeledEdge(min(u, v), max(u, v), 1, EdgeKind.HIERARCHY, parent=parent)


def make_lg(phrases, edges):
    return LabeledGraph(phrases=list(phrases), is_name=[False] * len(phrases), edges=edges)


class TestCollapseIdentity:
    def test_transitive_chain(self):
        lg = make_lg(["a", "b", "c"], [identity(0, 1), identity(1, 2)])
        concepts, node_map = collapse_identity(lg)
        assert len(concepts) == 1
        assert concepts[0].aliases == ("a", "b", "c")
        assert len(set(node_map.values())) == 1

    def test_no_identity_edges_singletons(self):
        lg = make_lg(["a", "b"], [hier(0, 1, parent=0)])
        concepts, _ = collapse_identity(lg)
        assert len(concepts) == 2

    def test_alias_groups_fixture(self):
        # covid-19 disease aliases grouped under disease
        lg = make_lg(
            ["disease", "covid-19", "covid-19 disease", "asthma"],
            [identity(1, 2), hier(0, 1, parent=0), hier(0, 3, parent=0)],
        )
        concepts, _ = collapse_identity(lg)
        groups = {c.aliases for c in concepts}
        assert ("covid-19", "covid-19 disease") in groups
        assert ("disease",) in groups

    def test_every_node_in_exactly_one_concept(self):
        rng = np.random.default_rng(0)
        n = 30
        edges = []
        for _ in range(25):
            u, v = rng.choice(n, size=2, replace=False)
            edges.append(identity(int(u), int(v)))
        lg = make_lg([f"p{i}" for i in range(n)], edges)
        concepts, node_map = collapse_identity(lg)
        seen = [node for c in concepts for node in c.members]
        assert sorted(seen) == list(range(n))
        assert set(node_map) == set(range(n))

    def test_duplicate_alias_sets_disambiguated(self):
        # two split nodes with the same phrase, no identity edges
        lg = make_lg(["il", "il"], [])
        concepts, _ = collapse_identity(lg)
        assert len(concepts) == 2
        assert concepts[0].concept_id != concepts[1].concept_id


class TestLiftHierarchy:
    def test_direct_mapping(self):
        lg = make_lg(
            ["disease", "asthma", "lung disease"],
            [
                hier(0, 1, parent=0),
                hier(0, 2, parent=0),
                hier(1, 2, parent=2),
            ],
        )
        concepts, node_map = collapse_identity(lg)
        ontology = lift_hierarchy(lg, concepts, node_map)
        assert len(ontology.edges) == 3
        topological_order(ontology)

    def test_duplicate_edges_merged(self):
        lg = make_lg(
            ["p1", "p2", "c1", "c2"],
            [
                identity(0, 1),
                identity(2, 3),
                hier(0, 2, parent=0),
                hier(1, 3, parent=1),
            ],
        )
        concepts, node_map = collapse_identity(lg)
        ontology = lift_hierarchy(lg, concepts, node_map)
        assert len(ontology.edges) == 1

    def test_internal_edges_dropped_with_warning(self, caplog):
        import logging

        lg = make_lg(
            ["a", "b"],
            [identity(0, 1), hier(0, 1, parent=0)],
        )
        concepts, node_map = collapse_identity(lg)
        with caplog.at_level(logging.WARNING):
            ontology = lift_hierarchy(lg, concepts, node_map)
        assert ontology.edges == []
        assert any("internal" in r.message for r in caplog.records)

    def test_concept_cycle_fatal(self):
        lg = make_lg(
            ["a", "b", "x", "y"],
            [
                identity(0, 2),
                identity(1, 3),
                hier(0, 1, parent=0),
                hier(2, 3, parent=3),
            ],
        )
        concepts, node_map = collapse_identity(lg)
        with pytest.raises(InvariantError):
            lift_hierarchy(lg, concepts, node_map)


class TestExport:
    def test_empty_ontology(self, tmp_path):
        ontology = Ontology(concepts=[], edges=[])
        path = tmp_path / "onto.json"
        export(ontology, path, format="json")
        loaded = import_json(path)
        assert loaded.concepts == [] and loaded.edges == []

    def test_golden_three_concept_chain(self, tmp_path):
        lg = make_lg(
            ["animal", "dog", "puppy"],
            [hier(0, 1, parent=0), hier(1, 2, parent=1)],
        )
        concepts, node_map = collapse_identity(lg)
        ontology = lift_hierarchy(lg, concepts, node_map)
        path = tmp_path / "onto.json"
        export(ontology, path, format="json")
        payload = json.loads(path.read_text())
        # frozen golden structure: ids are content hashes of the alias sets
        assert payload == {
            "concepts": [
                {"id": "26d33687bdb4", "aliases": ["puppy"]},
                {"id": "3199ea056253", "aliases": ["animal"]},
                {"id": "e49512524f47", "aliases": ["dog"]},
            ],
            "edges": [
                ["3199ea056253", "e49512524f47"],
                ["e49512524f47", "26d33687bdb4"],
            ],
        }

    def test_edge_tsv_pairwise_expansion(self, tmp_path):
        concepts = [
            Concept("p", ("parent a", "parent b")),
            Concept("c", ("child",)),
        ]
        ontology = Ontology(concepts=concepts, edges=[("p", "c")])
        path = tmp_path / "onto.tsv"
        export_edge_tsv(ontology, path)
        lines = path.read_text().splitlines()
        assert lines == ["parent a\tchild", "parent b\tchild"]

    def test_unknown_format(self, tmp_path):
        with pytest.raises(DataError):
            export(Ontology([], []), tmp_path / "x", format="xml")

    @given(data=st.data())
    @settings(max_examples=40, deadline=None)
    def test_round_trip_random_ontologies(self, tmp_path_factory, data):
        n = data.draw(st.integers(min_value=0, max_value=8))
        aliases = [
            tuple(sorted({f"w{i}-{j}" for j in range(data.draw(st.integers(1, 3)))}))
            for i in range(n)
        ]
        concepts = [Concept(f"c{i:02d}", a) for i, a in enumerate(aliases)]
        edges = set()
        for child in range(1, n):
            parent = data.draw(st.integers(0, child - 1))
            edges.add((f"c{parent:02d}", f"c{child:02d}"))
        ontology = Ontology(concepts=concepts, edges=sorted(edges))
        path = tmp_path_factory.mktemp("onto") / "o.json"
        export(ontology, path, format="json")
        loaded = import_json(path)
        assert [(c.concept_id, c.aliases) for c in loaded.concepts] == [
            (c.concept_id, c.aliases) for c in ontology.concepts
        ]
        assert loaded.edges == ontology.edges

    def test_export_deterministic_bytes(self, tmp_path):
        concepts = [Concept("b", ("beta",)), Concept("a", ("alpha",))]
        o1 = Ontology(concepts=list(concepts), edges=[("a", "b")])
        o2 = Ontology(concepts=list(reversed(concepts)), edges=[("a", "b")])
        p1, p2 = tmp_path / "1.json", tmp_path / "2.json"
        export(o1, p1, format="json")
        export(o2, p2, format="json")
        assert p1.read_bytes() == p2.read_bytes()


class TestTopology:
    def test_topological_sort_succeeds_on_dag(self):
        concepts = [Concept(c, (c,)) for c in "abcd"]
        ontology = Ontology(concepts, edges=[("a", "b"), ("b", "c"), ("a", "d")])
        order = topological_order(ontology)
        assert order.index("a") < order.index("b") < order.index("c")

    def test_cycle_reported(self):
        concepts = [Concept(c, (c,)) for c in "ab"]
        ontology = Ontology(concepts, edges=[("a", "b"), ("b", "a")])
        with pytest.raises(InvariantError, match="cycle"):
            topological_order(ontology)

    def test_transitive_reduction(self):
        concepts = [Concept(c, (c,)) for c in "abc"]
        ontology = Ontology(
            concepts, edges=[("a", "b"), ("b", "c"), ("a", "c")]
        )
        reduced = transitive_reduction(ontology)
        assert ("a", "c") not in reduced.edges
        assert len(reduced.edges) == 2

    def test_validate_rejects_unknown_concept(self):
        ontology = Ontology([Concept("a", ("a",))], edges=[("a", "ghost")])
        with pytest.raises(InvariantError):
            ontology.validate()
