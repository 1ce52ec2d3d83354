import logging

import numpy as np
import pytest

from ontoforge.classify import EdgeKind, LabeledEdge, LabeledGraph
from ontoforge.embeddings import EmbeddingTable, cosine, load_embeddings, save_embeddings
from ontoforge.errors import DataError, InvariantError
from ontoforge.senses import (
    SenseSplitTask,
    apply_split,
    build_knn_subgraph,
    resolve_senses,
    select_tasks,
)


def hier(u, v, parent, w=1):
    return LabeledEdge(min(u, v), max(u, v), w, EdgeKind.HIERARCHY, parent=parent)


def make_lg(phrases, names, edges):
    return LabeledGraph(phrases=list(phrases), is_name=list(names), edges=edges)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def cluster_vectors(center, count, rng, spread=0.05):
    return [unit(center + spread * rng.normal(size=len(center))) for _ in range(count)]


class TestSelectTasks:
    def test_name_with_children(self):
        lg = make_lg(
            ["gys2", "glycogen synthase 2", "liver glycogen synthase"],
            [True, False, False],
            [hier(0, 1, parent=0), hier(0, 2, parent=0)],
        )
        tasks = select_tasks(lg)
        assert len(tasks) == 1
        assert tasks[0].parent == 0
        assert tasks[0].children == [1, 2]

    def test_noun_with_children_skipped(self):
        lg = make_lg(
            ["disease", "asthma", "flu"],
            [False, False, False],
            [hier(0, 1, parent=0), hier(0, 2, parent=0)],
        )
        assert select_tasks(lg) == []

    def test_two_name_parents(self):
        lg = make_lg(
            ["na", "nb", "c1", "c2"],
            [True, True, False, False],
            [hier(0, 2, parent=0), hier(1, 3, parent=1)],
        )
        assert [t.parent for t in select_tasks(lg)] == [0, 1]

    def test_name_without_children_skipped(self):
        lg = make_lg(["n", "p"], [True, False], [hier(0, 1, parent=1)])
        assert select_tasks(lg) == []


class TestKnnSubgraph:
    def test_two_members_single_edge(self):
        edges = build_knn_subgraph([7, 9], [unit([1, 0]), unit([0, 1])], k_nn=5)
        assert edges == [(0, 1, 1.0)]

    def test_matches_exhaustive_nearest(self):
        rng = np.random.default_rng(2)
        vectors = [unit(rng.normal(size=8)) for _ in range(6)]
        edges = build_knn_subgraph(list(range(6)), vectors, k_nn=2)
        edge_set = {(u, v) for u, v, _ in edges}
        # brute-force: every directed 2-nearest pick must appear symmetrized
        for i in range(6):
            ranked = sorted(
                (j for j in range(6) if j != i),
                key=lambda j: (-cosine(vectors[i], vectors[j]), j),
            )
            for j in ranked[:2]:
                assert (min(i, j), max(i, j)) in edge_set

    def test_no_cross_cluster_edges_with_margin(self):
        rng = np.random.default_rng(3)
        a = cluster_vectors(np.ones(8), 4, rng)
        b = cluster_vectors(-np.ones(8), 3, rng)
        edges = build_knn_subgraph(list(range(7)), a + b, k_nn=2)
        for u, v, _ in edges:
            assert (u < 4) == (v < 4), "kNN edge crossed separated clusters"

    def test_cap_at_member_count(self):
        rng = np.random.default_rng(4)
        vectors = [unit(rng.normal(size=4)) for _ in range(3)]
        edges = build_knn_subgraph([0, 1, 2], vectors, k_nn=99)
        assert len(edges) == 3  # complete graph on 3 nodes

    def test_weighted_variant(self):
        vectors = [unit([1, 0]), unit([1, 0.1]), unit([0, 1])]
        edges = build_knn_subgraph([0, 1, 2], vectors, k_nn=1, weighted=True)
        weights = {(u, v): w for u, v, w in edges}
        assert weights[(0, 1)] == pytest.approx(cosine(vectors[0], vectors[1]))


class TestApplySplit:
    def test_single_community_merges_to_identity(self):
        lg = make_lg(
            ["gys2", "glycogen synthase 2", "liver glycogen synthase"],
            [True, False, False],
            [hier(0, 1, parent=0), hier(0, 2, parent=0)],
        )
        task = SenseSplitTask(parent=0, children=[1, 2])
        apply_split(lg, task, [[0, 1, 2]])
        assert all(e.kind is EdgeKind.IDENTITY for e in lg.edges)
        assert lg.node_count == 3  # no split nodes

    def test_multi_community_splits_with_parent_inheritance(self):
        # il: children israel (community 1) and il-6/il-8/il-9 (community 2);
        # parents: country (shared with israel), cytokine (shared with il-6).
        phrases = ["il", "israel", "il-6", "il-8", "il-9", "country", "cytokine"]
        names = [True, True, True, True, True, False, False]
        edges = [
            hier(0, 1, parent=0),
            hier(0, 2, parent=0),
            hier(0, 3, parent=0),
            hier(0, 4, parent=0),
            hier(5, 0, parent=5),  # country -> il
            hier(6, 0, parent=6),  # cytokine -> il
            hier(5, 1, parent=5),  # country -> israel
            hier(6, 2, parent=6),  # cytokine -> il-6
        ]
        lg = make_lg(phrases, names, edges)
        edges_before = len(lg.edges)
        task = SenseSplitTask(parent=0, children=[1, 2, 3, 4])
        apply_split(lg, task, [[0, 1], [2, 3, 4]])
        # conservation: nothing deleted, nothing duplicated here
        assert len(lg.edges) == edges_before
        assert lg.node_count == 9
        split_a, split_b = 7, 8
        assert lg.phrases[split_a] == lg.phrases[split_b] == "il"
        identity = {
            tuple(sorted((e.u, e.v))) for e in lg.edges if e.kind is EdgeKind.IDENTITY
        }
        assert (1, split_a) in identity
        assert {(2, split_b), (3, split_b), (4, split_b)} <= identity
        parents_a = lg.hierarchy_parents(split_a)
        parents_b = lg.hierarchy_parents(split_b)
        assert parents_a == [5]  # country only
        assert parents_b == [6]  # cytokine only

    def test_split_parent_inheritance_spec_example(self):
        # n has parents p1, p2; the community's children share only p1.
        phrases = ["n", "c1", "c2", "other", "p1", "p2"]
        names = [True, False, False, False, False, False]
        edges = [
            hier(0, 1, parent=0),
            hier(0, 2, parent=0),
            hier(0, 3, parent=0),
            hier(4, 0, parent=4),
            hier(5, 0, parent=5),
            hier(4, 1, parent=4),
            hier(4, 2, parent=4),
            hier(5, 3, parent=5),
        ]
        lg = make_lg(phrases, names, edges)
        task = SenseSplitTask(parent=0, children=[1, 2, 3])
        apply_split(lg, task, [[0, 1, 2], [3]])
        split_a, split_b = 6, 7
        assert lg.hierarchy_parents(split_a) == [4]  # p1 only
        assert lg.hierarchy_parents(split_b) == [5]  # p2 only

    def test_duplicated_parent_edges_logged(self):
        phrases = ["n", "c1", "c2", "p"]
        edges = [
            hier(0, 1, parent=0),
            hier(0, 2, parent=0),
            hier(3, 0, parent=3),
            hier(3, 1, parent=3),
            hier(3, 2, parent=3),
        ]
        lg = make_lg(phrases, [True, False, False, False], edges)
        from ontoforge.senses import SenseSummary

        summary = SenseSummary()
        apply_split(lg, SenseSplitTask(0, [1, 2]), [[0, 1], [2]], summary)
        assert summary.duplicated_parent_edges == 1
        # the parent edge now exists toward both split nodes
        assert len([e for e in lg.edges if e.kind is EdgeKind.HIERARCHY and e.parent == 3]) == 4

    def test_bad_partition_rejected(self):
        lg = make_lg(["n", "c"], [True, False], [hier(0, 1, parent=0)])
        with pytest.raises(InvariantError):
            apply_split(lg, SenseSplitTask(0, [1]), [[0]])

    def test_case2_no_hierarchy_left_between_parent_and_children(self):
        lg = make_lg(
            ["n", "c1", "c2"],
            [True, False, False],
            [hier(0, 1, parent=0), hier(0, 2, parent=0), hier(1, 2, parent=1)],
        )
        apply_split(lg, SenseSplitTask(0, [1, 2]), [[0, 1, 2]])
        for e in lg.edges:
            if 0 in e.endpoints() and e.kind is EdgeKind.HIERARCHY:
                pytest.fail("hierarchy edge between parent and children survived")


class TestResolveSenses:
    def alias_children_lg(self):
        return make_lg(
            ["gys2", "glycogen synthase 2", "liver glycogen synthase"],
            [True, False, False],
            [hier(0, 1, parent=0), hier(0, 2, parent=0)],
        )

    def test_aliased_children_merge(self):
        rng = np.random.default_rng(1)
        vectors = cluster_vectors(np.ones(16), 3, rng)
        table = EmbeddingTable(
            dim=16,
            vectors={
                "gys2": vectors[0],
                "glycogen synthase 2": vectors[1],
                "liver glycogen synthase": vectors[2],
            },
        )
        lg = self.alias_children_lg()
        summary = resolve_senses(lg, table, k_nn=2)
        assert summary.merged == 1
        assert summary.split == 0
        assert all(e.kind is EdgeKind.IDENTITY for e in lg.edges)

    def test_ambiguous_name_split(self):
        rng = np.random.default_rng(2)
        il_cluster = cluster_vectors(np.ones(16), 4, rng)
        geo_cluster = cluster_vectors(-np.ones(16), 2, rng)
        table = EmbeddingTable(
            dim=16,
            vectors={
                "il": il_cluster[0],
                "il-6": il_cluster[1],
                "il-8": il_cluster[2],
                "il-9": il_cluster[3],
                "israel": geo_cluster[0],
                "tel aviv": geo_cluster[1],
            },
        )
        phrases = ["il", "israel", "tel aviv", "il-6", "il-8", "il-9"]
        names = [True, True, True, True, True, True]
        edges = [hier(0, i, parent=0) for i in range(1, 6)]
        lg = make_lg(phrases, names, edges)
        summary = resolve_senses(lg, table, k_nn=2)
        assert summary.split == 1
        assert summary.new_nodes == 2
        assert lg.phrases.count("il") == 3  # original + two split senses

    def test_missing_embedding_skips_task(self, caplog):
        lg = self.alias_children_lg()
        table = EmbeddingTable(dim=4, vectors={"gys2": np.ones(4)})
        with caplog.at_level(logging.WARNING):
            summary = resolve_senses(lg, table, k_nn=2)
        assert summary.skipped_missing_embedding == 1
        assert all(e.kind is EdgeKind.HIERARCHY for e in lg.edges)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        vectors = {f"w{i}": unit(rng.normal(size=8)) for i in range(4)}
        vectors["name"] = unit(rng.normal(size=8))
        table = EmbeddingTable(dim=8, vectors=vectors)

        def build():
            lg = make_lg(
                ["name", "w0", "w1", "w2", "w3"],
                [True, False, False, False, False],
                [hier(0, i, parent=0) for i in range(1, 5)],
            )
            resolve_senses(lg, table, k_nn=2, seed=5)
            return [(e.u, e.v, e.kind.value, e.parent) for e in lg.edges], lg.phrases

        assert build() == build()


class TestEmbeddingsFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        table = EmbeddingTable(
            dim=5, vectors={"alpha": rng.normal(size=5), "beta c": rng.normal(size=5)}
        )
        path = tmp_path / "emb.tsv"
        save_embeddings(path, table)
        loaded = load_embeddings(path)
        assert loaded.dim == 5
        assert set(loaded.vectors) == {"alpha", "beta c"}
        for key in table.vectors:
            assert np.allclose(loaded.vectors[key], table.vectors[key])

    def test_dimension_mismatch_rejected(self, tmp_path):
        path = tmp_path / "emb.tsv"
        path.write_text("3\nphrase\t1.0 2.0\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_embeddings(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "emb.tsv"
        path.write_text("phrase\t1.0 2.0\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_embeddings(path)
