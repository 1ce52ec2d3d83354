"""Acceptance criteria, one test per criterion.

Every test enforces its stated tolerance and runtime budget and prints
one line: ACCEPTANCE <criterion>: PASS (a failed assertion fails the
test, so a printed line means the criterion held).

Run with:  pytest tests/test_acceptance.py -v -s
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as scipy_stats

from conftest import brute_force_betweenness, random_graph
from ontoforge.centrality import PivotConfig, approx_betweenness, exact_betweenness
from ontoforge.classify import EdgeKind, PmiStats, compute_pmi, load_labeled_graph
from ontoforge.community import louvain
from ontoforge.config import PipelineConfig
from ontoforge.embeddings import load_embeddings
from ontoforge.evaluate import adjusted_rand_index, cluster_entropy
from ontoforge.pipeline import run_pipeline
from ontoforge.planted import (
    PlantedOntologySpec,
    generate_planted,
    planted_taxonomy_graph,
)

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture()
def announce(capsys):
    def _announce(criterion: str, detail: str = ""):
        with capsys.disabled():
            suffix = f" ({detail})" if detail else ""
            print(f"\nACCEPTANCE {criterion}: PASS{suffix}", flush=True)

    return _announce


def planted_run(tmp_path: Path, seed: int, tag: str = "", **config_overrides):
    """Generator config pinned by the acceptance criteria."""
    spec = PlantedOntologySpec(
        depth=3,
        branching=4,
        aliases_per_concept=3,
        documents=2000,
        chains_per_document=5,
        ambiguity_rate=0.05,
        noise_rate=0.05,
    )
    generated = generate_planted(spec, seed=seed, outdir=tmp_path / f"gen{tag}{seed}")
    params = dict(
        chains=generated.chains_path,
        embeddings=generated.embeddings_path,
        reference_hierarchy=generated.truth_hierarchy_path,
        reference_aliases=generated.truth_aliases_path,
        outdir=tmp_path / f"run{tag}{seed}",
        exact=True,
        knn=2,
        seed=seed,
        figures=False,
    )
    params.update(config_overrides)
    cfg = PipelineConfig(**params)
    results = run_pipeline(cfg)
    return generated, cfg, results


class TestCentralityCriteria:
    def test_exact_centrality_oracle(self, announce):
        started = time.monotonic()
        rng = np.random.default_rng(20240601)
        checked = 0
        for _ in range(200):
            g = random_graph(rng, max_nodes=50)
            mine = exact_betweenness(g)
            oracle = brute_force_betweenness(g)
            assert np.allclose(mine, oracle, rtol=1e-9, atol=1e-12)
            checked += 1
        elapsed = time.monotonic() - started
        assert checked >= 200
        assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s"
        announce("exact-centrality-oracle", f"{checked} graphs in {elapsed:.1f}s")

    def test_approximation_degeneracy(self, announce):
        started = time.monotonic()
        graphs = [
            planted_taxonomy_graph(depth=4, branching=6, extra_alias_rate=0.25, seed=5),
            planted_taxonomy_graph(depth=3, branching=9, extra_alias_rate=0.3, seed=6),
        ]
        rng = np.random.default_rng(77)
        graphs.extend(random_graph(rng, max_nodes=60) for _ in range(3))
        for g in graphs:
            assert g.node_count <= 2000
            exact = exact_betweenness(g)
            approx = approx_betweenness(g, PivotConfig(k=g.node_count, seed=11))
            nonzero = exact != 0
            assert np.allclose(
                approx[nonzero], exact[nonzero], rtol=1e-9, atol=0.0
            )
            assert (approx[~nonzero] == 0.0).all()
        elapsed = time.monotonic() - started
        assert elapsed < 60.0, f"degeneracy sweep took {elapsed:.1f}s"
        announce(
            "approximation-degeneracy",
            f"{len(graphs)} graphs, max {max(g.node_count for g in graphs)} nodes, "
            f"{elapsed:.1f}s",
        )

    def test_approximation_consistency(self, announce):
        started = time.monotonic()
        g = planted_taxonomy_graph(depth=4, branching=8, extra_alias_rate=0.1, seed=42)
        assert g.node_count >= 5000
        exact = exact_betweenness(g)
        runs = {
            k: approx_betweenness(g, PivotConfig(k=k, seed=9000 + k))
            for k in (100, 500, 1000, 2000, 2500)
        }
        rho = scipy_stats.spearmanr(exact, runs[500]).statistic
        assert rho >= 0.95, f"spearman {rho:.4f}"

        def ordering(scores, u, v):
            if scores[u] == scores[v]:
                return 0
            return 1 if scores[u] > scores[v] else -1

        edges = list(g.edges())
        disputed = sum(
            1
            for u, v, _ in edges
            if len({ordering(scores, u, v) for scores in runs.values()}) > 1
        )
        rate = disputed / len(edges)
        assert rate <= 0.10, f"dispute rate {rate:.3f}"
        elapsed = time.monotonic() - started
        assert elapsed < 300.0, f"consistency experiment took {elapsed:.1f}s"
        announce(
            "approximation-consistency",
            f"{g.node_count} nodes, spearman {rho:.3f}, "
            f"disputed {rate:.1%}, {elapsed:.0f}s",
        )


class TestEndToEndCriteria:
    def test_planted_recovery_across_seeds(self, announce, tmp_path):
        started = time.monotonic()
        metrics = []
        for seed in (101, 102, 103, 104, 105):
            _, _, results = planted_run(tmp_path, seed)
            report = results["evaluate"]
            assert report["hierarchy_recall"] >= 0.80, (seed, report)
            assert report["direction_consistency"] >= 0.90, (seed, report)
            assert report["alias_entropy"] <= 0.2, (seed, report)
            assert report["alias_ari"] >= 0.7, (seed, report)
            metrics.append(report)
        elapsed = time.monotonic() - started
        assert elapsed < 300.0, f"planted recovery took {elapsed:.1f}s"
        announce(
            "end-to-end-planted-recovery",
            "5 seeds, recall>=%.3f dir>=%.3f entropy<=%.3f ari>=%.3f, %.0fs"
            % (
                min(m["hierarchy_recall"] for m in metrics),
                min(m["direction_consistency"] for m in metrics),
                max(m["alias_entropy"] for m in metrics),
                min(m["alias_ari"] for m in metrics),
                elapsed,
            ),
        )

    def test_pmi_filter(self, announce, tmp_path):
        generated, cfg, _ = planted_run(tmp_path, 201, tag="pmi")
        injected = {
            tuple(line.split("\t"))
            for line in generated.noise_pairs_path.read_text().splitlines()
        }
        lg = load_labeled_graph(
            Path(cfg.outdir) / "nodes.final.tsv", Path(cfg.outdir) / "labels.final.tsv"
        )
        injected_seen = injected_caught = true_edges = true_filtered = 0
        for e in lg.edges:
            pair = tuple(sorted((lg.phrases[e.u], lg.phrases[e.v])))
            if pair in injected:
                injected_seen += 1
                injected_caught += e.kind is EdgeKind.NOISE
            else:
                true_edges += 1
                true_filtered += e.kind is EdgeKind.NOISE
        noise_rate = injected_caught / injected_seen
        false_rate = true_filtered / true_edges
        assert noise_rate >= 0.50, f"only {noise_rate:.1%} of injected noise caught"
        assert false_rate <= 0.02, f"{false_rate:.2%} of true edges filtered"

        # hand-computed examples at 1e-12
        stats = PmiStats(counts={0: 10, 1: 5}, pair_counts={(0, 1): 2}, total=100)
        assert math.isclose(compute_pmi(stats, 0, 1), math.log(4), rel_tol=1e-12)
        stats = PmiStats(counts={0: 50, 1: 50}, pair_counts={(0, 1): 1}, total=100)
        assert math.isclose(
            compute_pmi(stats, 0, 1), math.log(0.01 / 0.25), rel_tol=1e-12
        )
        stats = PmiStats(counts={0: 10, 1: 10}, pair_counts={(0, 1): 1}, total=100)
        assert compute_pmi(stats, 0, 1) == 0.0
        announce(
            "pmi-filter",
            f"noise caught {noise_rate:.1%}, true filtered {false_rate:.2%}",
        )

    def test_determinism(self, announce, tmp_path):
        exports = ("ontology.json", "ontology.tsv", "labels.final.tsv", "scores.tsv")
        _, cfg_a, _ = planted_run(tmp_path, 301, tag="a")
        _, cfg_b, _ = planted_run(tmp_path, 301, tag="b")
        for name in exports:
            assert (Path(cfg_a.outdir) / name).read_bytes() == (
                Path(cfg_b.outdir) / name
            ).read_bytes(), f"{name} differs between identical runs"
        _, cfg_c, _ = planted_run(tmp_path, 301, tag="c", workers=4)
        for name in exports:
            assert (Path(cfg_a.outdir) / name).read_bytes() == (
                Path(cfg_c.outdir) / name
            ).read_bytes(), f"{name} differs across worker counts"
        announce("determinism", "byte-identical across reruns and worker counts")


class TestLouvainCriterion:
    def test_louvain(self, announce):
        # planted two-clique partitions, sizes 3..6, recovered exactly
        for size_a in range(3, 7):
            for size_b in range(3, 7):
                a = list(range(size_a))
                b = list(range(size_a, size_a + size_b))
                edges = (
                    [(i, j, 1.0) for i in a for j in a if i < j]
                    + [(i, j, 1.0) for i in b for j in b if i < j]
                    + [(a[0], b[0], 1.0)]
                )
                result = louvain(size_a + size_b, edges)
                assert {frozenset(c) for c in result.communities} == {
                    frozenset(a),
                    frozenset(b),
                }
        # per-pass modularity non-decreasing on 1,000 random subgraphs
        rng = np.random.default_rng(55)
        for _ in range(1000):
            n = int(rng.integers(2, 30))
            p = float(rng.uniform(0.05, 0.6))
            edges = [
                (i, j, float(rng.integers(1, 5)))
                for i in range(n)
                for j in range(i + 1, n)
                if rng.random() < p
            ]
            trace = louvain(n, edges).modularity_trace
            for earlier, later in zip(trace, trace[1:]):
                assert later >= earlier - 1e-9
        announce("louvain", "16 clique pairs exact, 1000 traces monotone")


class TestSenseResolutionCriterion:
    def test_sense_resolution(self, announce):
        from ontoforge.classify import LabeledEdge, LabeledGraph
        from ontoforge.embeddings import EmbeddingTable
        from ontoforge.senses import resolve_senses

        def hier(u, v, parent):
            return LabeledEdge(min(u, v), max(u, v), 1, EdgeKind.HIERARCHY, parent)

        def unit(vec):
            vec = np.asarray(vec, dtype=np.float64)
            return vec / np.linalg.norm(vec)

        rng = np.random.default_rng(8)

        # A name over aliased children in one embedding cluster
        # collapses into a single concept.
        base = rng.normal(size=24)
        table = EmbeddingTable(
            dim=24,
            vectors={
                "gys2": unit(base + 0.05 * rng.normal(size=24)),
                "glycogen synthase 2": unit(base + 0.05 * rng.normal(size=24)),
                "liver glycogen synthase": unit(base + 0.05 * rng.normal(size=24)),
            },
        )
        lg = LabeledGraph(
            phrases=["gys2", "glycogen synthase 2", "liver glycogen synthase"],
            is_name=[True, False, False],
            edges=[hier(0, 1, parent=0), hier(0, 2, parent=0)],
        )
        summary = resolve_senses(lg, table, k_nn=2)
        assert summary.merged == 1 and summary.split == 0
        assert all(e.kind is EdgeKind.IDENTITY for e in lg.edges)
        from ontoforge.ontology import collapse_identity

        concepts, _ = collapse_identity(lg)
        assert len(concepts) == 1

        # Two separated embedding clusters split the name, and each
        # split inherits only the parents shared with its community.
        base_il = rng.normal(size=24)
        base_geo = -base_il
        vectors = {
            "il": unit(base_il + 0.05 * rng.normal(size=24)),
            "il-6": unit(base_il + 0.05 * rng.normal(size=24)),
            "il-8": unit(base_il + 0.05 * rng.normal(size=24)),
            "il-9": unit(base_il + 0.05 * rng.normal(size=24)),
            "israel": unit(base_geo + 0.05 * rng.normal(size=24)),
            "tel aviv": unit(base_geo + 0.05 * rng.normal(size=24)),
            "cytokine": unit(rng.normal(size=24)),
            "country": unit(rng.normal(size=24)),
        }
        table = EmbeddingTable(dim=24, vectors=vectors)
        phrases = ["il", "israel", "tel aviv", "il-6", "il-8", "il-9",
                   "country", "cytokine"]
        lg = LabeledGraph(
            phrases=phrases,
            is_name=[True, True, True, True, True, True, False, False],
            edges=[
                hier(0, 1, parent=0),
                hier(0, 2, parent=0),
                hier(0, 3, parent=0),
                hier(0, 4, parent=0),
                hier(0, 5, parent=0),
                hier(6, 0, parent=6),   # country -> il
                hier(7, 0, parent=7),   # cytokine -> il
                hier(6, 1, parent=6),   # country -> israel
                hier(7, 3, parent=7),   # cytokine -> il-6
            ],
        )
        summary = resolve_senses(lg, table, k_nn=2)
        assert summary.split == 1 and summary.new_nodes == 2
        splits = [i for i in range(8, 10)]
        assert all(lg.phrases[s] == "il" for s in splits)
        parent_sets = {frozenset(lg.hierarchy_parents(s)) for s in splits}
        assert parent_sets == {frozenset({6}), frozenset({7})}
        identity_partners = {
            s: {
                e.u if e.v == s else e.v
                for e in lg.edges
                if e.kind is EdgeKind.IDENTITY and s in e.endpoints()
            }
            for s in splits
        }
        grouped = {frozenset(members) for members in identity_partners.values()}
        assert grouped == {frozenset({1, 2}), frozenset({3, 4, 5})}
        announce("sense-resolution", "alias merge + ambiguous-name split verified")


class TestEvaluatorCriterion:
    def test_evaluator_self_check(self, announce):
        gold = {"s1": 0, "s2": 0, "s3": 0, "s4": 0, "s5": 1, "s6": 1, "s7": 2, "s8": 2}
        pred = {"s1": 0, "s2": 0, "s3": 1, "s4": 1, "s5": 1, "s6": 2, "s7": 3, "s8": 3}
        # contingency arithmetic by hand: index 3, expected (5*8)/28,
        # max (5+8)/2 -> ARI = (3 - 10/7) / (13/2 - 10/7) = 22/71
        assert math.isclose(adjusted_rand_index(pred, gold), 22 / 71, rel_tol=1e-12)
        # entropy: only {s3,s4,s5} impure; (3/8) * (ln 3 - (2/3) ln 2)
        assert math.isclose(
            cluster_entropy(pred, gold),
            (3 * math.log(3) - 2 * math.log(2)) / 8,
            rel_tol=1e-12,
        )
        rng = np.random.default_rng(123)
        for _ in range(100):
            n = int(rng.integers(2, 40))
            partition = {f"x{i}": int(rng.integers(0, 6)) for i in range(n)}
            assert adjusted_rand_index(partition, partition) == pytest.approx(1.0)
        announce("evaluator-self-check", "hand values at 1e-12, ARI(P,P)=1 x100")


class TestSecondaryCriterion:
    def test_embed_provider_round_trip(self, announce, tmp_path):
        """The secondary CLI's output parses through the primary format
        reader; the deterministic hash encoder needs no neural model."""
        phrases = tmp_path / "phrases.txt"
        phrases.write_text("asthma\nlung disease\ncovid-19\n", encoding="utf-8")
        out = tmp_path / "embeddings.tsv"
        embedder_src = REPO_ROOT / "embedder" / "src"
        proc = subprocess.run(
            [
                sys.executable, "-m", "phrase_embedder", "embed",
                "--phrases", str(phrases), "--model", "hash:32",
                "--out", str(out), "--batch", "2",
            ],
            capture_output=True,
            text=True,
            env={
                "PATH": "/usr/bin:/bin",
                "PYTHONPATH": str(embedder_src),
            },
        )
        assert proc.returncode == 0, proc.stderr
        table = load_embeddings(out)
        assert table.dim == 32
        assert set(table.vectors) == {"asthma", "lung disease", "covid-19"}
        for vector in table.vectors.values():
            assert np.isfinite(vector).all()
            assert vector.shape == (32,)
        # stable bytes: the fake encoder is deterministic across runs
        out2 = tmp_path / "embeddings2.tsv"
        subprocess.run(
            [
                sys.executable, "-m", "phrase_embedder", "embed",
                "--phrases", str(phrases), "--model", "hash:32",
                "--out", str(out2),
            ],
            capture_output=True,
            env={"PATH": "/usr/bin:/bin", "PYTHONPATH": str(embedder_src)},
        )
        assert out.read_bytes() == out2.read_bytes()
        announce("embed-provider-round-trip", "secondary output parsed by primary reader")
