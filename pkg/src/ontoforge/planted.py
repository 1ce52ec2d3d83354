"""Synthetic planted-ontology corpora for end-to-end testing.

A random taxonomy of synthetic concepts is sampled; every concept gets a
few alias strings. Coreference chains are then drawn along the
taxonomy's root-to-leaf paths: adjacent-level segments (a parent alias
co-occurring with a child alias) plus same-concept alias chains. A
deterministic coverage sweep guarantees every adjacent alias pair and
every same-concept alias pair co-occurs at least once, so the graph has
the intended local closure; random segments on top give the weight
profile, with most of the mass near the top of the taxonomy where
phrases are common.

Ambiguity injects shared names: pairs of leaf concepts in different
branches receive one extra capitalized alias with the same surface (and
capitalized base aliases so name/noun direction correction leaves their
edges intact), exercising the sense-split path. Noise injects weight-1
chains between common upper-level phrases from different branches,
exercising the PMI filter; injected pairs are recorded so tests can
check what the filter caught.

Outputs (under an output directory):
  chains.jsonl           pipeline input
  embeddings.tsv         synthetic vectors, clustered per concept
  truth_ontology.json    planted ontology in the export format
  truth_hierarchy.tsv    child<TAB>parent string pairs (reference format)
  truth_aliases.tsv      one alias group per line (reference format)
  noise_pairs.tsv        canonical injected pairs, one per line
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingTable, save_embeddings
from .errors import DataError
from .graph import CorefGraph
from .ontology import Concept, Ontology, export_json

_CONSONANTS = "bdfgklmnprtvz"
_VOWELS = "aeiou"
_FINALS = "bdklmnprtx"

# Random adjacent-level segments are biased toward the top of the
# taxonomy: upper-level phrases must be far more frequent than leaf
# phrases for the PMI noise filter to behave like it does on a corpus.
# Root segments outweigh the rest so that when a branching factor of 2
# makes root and level-1 betweenness tie exactly, the weighted-degree
# tie-break still points the edge downward.
_LEVEL_MASS = {0: 10.0, 1: 6.0}
_DEEP_MASS = 3.0
_DEEP_DECAY = 0.5
_SAME_CONCEPT_SHARE = 0.10


@dataclass
class PlantedOntologySpec:
    """Shape of the planted taxonomy and its sampled corpus."""

    depth: int = 3
    branching: int = 4
    aliases_per_concept: int = 3
    chains_per_document: int = 5
    documents: int = 2000
    ambiguity_rate: float = 0.05
    noise_rate: float = 0.05

    def validate(self) -> None:
        if self.depth < 2:
            raise DataError(f"depth must be >= 2, got {self.depth}")
        if self.branching < 2:
            raise DataError(f"branching must be >= 2, got {self.branching}")
        if self.aliases_per_concept < 1:
            raise DataError("aliases_per_concept must be >= 1")
        if self.chains_per_document < 1:
            raise DataError("chains_per_document must be >= 1")
        if self.documents < 1:
            raise DataError("documents must be >= 1")
        for rate, name in ((self.ambiguity_rate, "ambiguity_rate"), (self.noise_rate, "noise_rate")):
            if not 0.0 <= rate <= 1.0:
                raise DataError(f"{name} must be in [0, 1], got {rate}")
        if self.ambiguity_rate > 0.0 and self.aliases_per_concept < 2:
            # each sense of a shared name must form a multi-node cluster;
            # modularity never isolates an attached singleton, so the
            # resolver could not split single-alias senses
            raise DataError(
                "ambiguity_rate > 0 requires aliases_per_concept >= 2"
            )


class _WordMaker:
    """Unique synthetic words that survive phrase normalization:
    lowercase, no stop-word collisions, no plural-looking endings."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.used: set[str] = set()

    def word(self) -> str:
        while True:
            syllables = int(self.rng.integers(2, 4))
            parts = []
            for _ in range(syllables):
                parts.append(self.rng.choice(list(_CONSONANTS)))
                parts.append(self.rng.choice(list(_VOWELS)))
            parts.append(self.rng.choice(list(_FINALS)))
            candidate = "".join(parts)
            if candidate not in self.used:
                self.used.add(candidate)
                return candidate


@dataclass
class _Taxonomy:
    parent: list[int | None]  # concept index -> parent concept index
    level: list[int]
    aliases: list[list[str]]  # surface forms as they appear in chains
    ambiguous_names: list[tuple[str, int, int]]  # (surface, concept_a, concept_b)

    @property
    def concept_count(self) -> int:
        return len(self.parent)

    def canonical(self, surface: str) -> str:
        return surface.lower()

    def children_of(self, concept: int) -> list[int]:
        return [i for i, p in enumerate(self.parent) if p == concept]

    def subtree_root(self, concept: int) -> int:
        """The level-1 ancestor (the branch the concept lives in)."""
        node = concept
        while self.level[node] > 1:
            parent = self.parent[node]
            assert parent is not None
            node = parent
        return node


def _build_taxonomy(spec: PlantedOntologySpec, rng: np.random.Generator) -> _Taxonomy:
    parent: list[int | None] = [None]
    level = [0]
    frontier = [0]
    for lvl in range(1, spec.depth + 1):
        next_frontier = []
        for node in frontier:
            for _ in range(spec.branching):
                parent.append(node)
                level.append(lvl)
                next_frontier.append(len(parent) - 1)
        frontier = next_frontier

    words = _WordMaker(rng)
    aliases = [
        [words.word() for _ in range(spec.aliases_per_concept)]
        for _ in range(len(parent))
    ]

    taxonomy = _Taxonomy(parent=parent, level=level, aliases=aliases, ambiguous_names=[])
    _inject_ambiguity(spec, rng, taxonomy, words)
    return taxonomy


def _inject_ambiguity(
    spec: PlantedOntologySpec,
    rng: np.random.Generator,
    taxonomy: _Taxonomy,
    words: _WordMaker,
) -> None:
    if spec.ambiguity_rate <= 0.0:
        return
    pair_count = max(1, round(spec.ambiguity_rate * taxonomy.concept_count / 2))
    leaves = [i for i, lvl in enumerate(taxonomy.level) if lvl == spec.depth]
    by_branch: dict[int, list[int]] = {}
    for leaf in leaves:
        by_branch.setdefault(taxonomy.subtree_root(leaf), []).append(leaf)
    branches = sorted(by_branch)
    if len(branches) < 2:
        return
    taken: set[int] = set()
    for _ in range(pair_count):
        branch_a, branch_b = rng.choice(branches, size=2, replace=False)
        pool_a = [c for c in by_branch[branch_a] if c not in taken]
        pool_b = [c for c in by_branch[branch_b] if c not in taken]
        if not pool_a or not pool_b:
            continue
        concept_a = int(pool_a[int(rng.integers(len(pool_a)))])
        concept_b = int(pool_b[int(rng.integers(len(pool_b)))])
        taken.update((concept_a, concept_b))
        shared = words.word().capitalize()
        # Capitalize the base aliases too: the shared name's children must
        # themselves be names, or direction correction would strip them
        # away before the sense resolver sees the task.
        for concept in (concept_a, concept_b):
            taxonomy.aliases[concept] = [a.capitalize() for a in taxonomy.aliases[concept]]
            taxonomy.aliases[concept].append(shared)
        taxonomy.ambiguous_names.append((shared, concept_a, concept_b))


def _sweep_chains(taxonomy: _Taxonomy, depth: int) -> list[list[str]]:
    """Deterministic coverage: every same-concept alias pair and every
    adjacent-level alias pair co-occurs at least once. Non-leaf concepts
    get their alias chain twice; their phrase counts are high, and a
    weight-1 alias pair between common phrases would look like chance
    co-occurrence to the PMI filter."""
    chains: list[list[str]] = []
    for concept in range(taxonomy.concept_count):
        if len(taxonomy.aliases[concept]) >= 2:
            chains.append(list(taxonomy.aliases[concept]))
            if taxonomy.level[concept] < depth:
                chains.append(list(taxonomy.aliases[concept]))
    for child in range(taxonomy.concept_count):
        parent = taxonomy.parent[child]
        if parent is None:
            continue
        for parent_alias in taxonomy.aliases[parent]:
            for child_alias in taxonomy.aliases[child]:
                chains.append([parent_alias, child_alias])
    return chains


def _level_weights(depth: int) -> np.ndarray:
    weights = []
    for lvl in range(depth):  # segment (lvl, lvl + 1)
        if lvl in _LEVEL_MASS:
            weights.append(_LEVEL_MASS[lvl])
        else:
            weights.append(_DEEP_MASS * _DEEP_DECAY ** (lvl - 2))
    arr = np.array(weights, dtype=np.float64)
    return arr / arr.sum()


def _same_concept_probs(
    taxonomy: _Taxonomy, depth: int
) -> tuple[list[int], np.ndarray]:
    """Same-concept chains are drawn level-mass weighted: aliases of a
    common upper-level phrase co-occur far more often than leaf aliases,
    which keeps their PMI above chance despite their large counts."""
    candidates = [
        c for c in range(taxonomy.concept_count) if len(taxonomy.aliases[c]) >= 2
    ]
    if not candidates:
        return [], np.zeros(0)
    masses = []
    per_level_total: dict[int, int] = {}
    for c in candidates:
        per_level_total[taxonomy.level[c]] = per_level_total.get(taxonomy.level[c], 0) + 1
    for c in candidates:
        lvl = taxonomy.level[c]
        if lvl in _LEVEL_MASS:
            mass = _LEVEL_MASS[lvl]
        else:
            mass = _DEEP_MASS * _DEEP_DECAY ** (lvl - 2)
        masses.append(mass / per_level_total[lvl])
    probs = np.array(masses, dtype=np.float64)
    return candidates, probs / probs.sum()


def _random_chain(
    taxonomy: _Taxonomy,
    rng: np.random.Generator,
    level_probs: np.ndarray,
    by_level: dict[int, list[int]],
    same_concept: tuple[list[int], np.ndarray],
) -> list[str]:
    candidates, concept_probs = same_concept
    if candidates and rng.random() < _SAME_CONCEPT_SHARE:
        concept = candidates[int(rng.choice(len(candidates), p=concept_probs))]
        picks = rng.choice(len(taxonomy.aliases[concept]), size=2, replace=False)
        return [taxonomy.aliases[concept][int(i)] for i in picks]
    lvl = int(rng.choice(len(level_probs), p=level_probs))
    child = by_level[lvl + 1][int(rng.integers(len(by_level[lvl + 1])))]
    parent = taxonomy.parent[child]
    assert parent is not None
    parent_alias = taxonomy.aliases[parent][int(rng.integers(len(taxonomy.aliases[parent])))]
    child_alias = taxonomy.aliases[child][int(rng.integers(len(taxonomy.aliases[child])))]
    return [parent_alias, child_alias]


def _noise_candidates(taxonomy: _Taxonomy, depth: int) -> list[tuple[int, int]]:
    """Concept pairs for spurious chains: one endpoint at level 1, the
    other at level 1 or 2 but never a leaf, in different branches. These
    are the common phrases whose chance co-occurrence the PMI filter
    must reject; touching leaves would perturb their zero centrality."""
    deepest = max(1, depth - 1)
    level_one = [c for c, lvl in enumerate(taxonomy.level) if lvl == 1]
    other_levels = [
        c
        for c, lvl in enumerate(taxonomy.level)
        if lvl in (1, 2) and lvl <= deepest
    ]
    pairs = []
    for a in level_one:
        for b in other_levels:
            if a >= b and taxonomy.level[b] == 1:
                continue  # keep one orientation of level-1 pairs
            if taxonomy.subtree_root(a) == taxonomy.subtree_root(b):
                continue
            pairs.append((a, b))
    return pairs


@dataclass
class PlantedOutput:
    chains_path: Path
    embeddings_path: Path
    truth_ontology_path: Path
    truth_hierarchy_path: Path
    truth_aliases_path: Path
    noise_pairs_path: Path
    concepts: int
    strings: int
    chains: int
    noise_chains: int
    ambiguous_names: list[str]

    def to_dict(self) -> dict:
        return {
            "concepts": self.concepts,
            "strings": self.strings,
            "chains": self.chains,
            "noise_chains": self.noise_chains,
            "ambiguous_names": self.ambiguous_names,
        }


def generate_planted(
    spec: PlantedOntologySpec, seed: int, outdir: Path
) -> PlantedOutput:
    """Sample a taxonomy and write the corpus plus ground-truth files."""
    spec.validate()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    taxonomy = _build_taxonomy(spec, rng)

    sweep = _sweep_chains(taxonomy, spec.depth)
    capacity = spec.documents * spec.chains_per_document
    if capacity < len(sweep) * 1.2:
        raise DataError(
            f"corpus too small: {spec.documents} documents x "
            f"{spec.chains_per_document} chains cannot hold the coverage "
            f"sweep of {len(sweep)} chains; increase documents"
        )
    noise_budget = round(spec.noise_rate * capacity / (1.0 + spec.noise_rate))
    random_budget = capacity - len(sweep) - noise_budget

    level_probs = _level_weights(spec.depth)
    by_level: dict[int, list[int]] = {}
    for concept, lvl in enumerate(taxonomy.level):
        by_level.setdefault(lvl, []).append(concept)
    same_concept = _same_concept_probs(taxonomy, spec.depth)
    chains = list(sweep)
    for _ in range(random_budget):
        chains.append(_random_chain(taxonomy, rng, level_probs, by_level, same_concept))

    noise_pairs: set[tuple[str, str]] = set()
    candidates = _noise_candidates(taxonomy, spec.depth)
    # A shared ambiguous name belongs to concepts in two branches; using
    # it as a noise endpoint could collide with a true alias pair.
    shared_names = {name for name, _, _ in taxonomy.ambiguous_names}
    noise_chains = 0
    if noise_budget > 0 and candidates:
        for _ in range(noise_budget):
            a, b = candidates[int(rng.integers(len(candidates)))]
            pool_a = [x for x in taxonomy.aliases[a] if x not in shared_names]
            pool_b = [x for x in taxonomy.aliases[b] if x not in shared_names]
            alias_a = pool_a[int(rng.integers(len(pool_a)))]
            alias_b = pool_b[int(rng.integers(len(pool_b)))]
            chains.append([alias_a, alias_b])
            pair = tuple(sorted((taxonomy.canonical(alias_a), taxonomy.canonical(alias_b))))
            noise_pairs.add(pair)  # type: ignore[arg-type]
            noise_chains += 1

    order = rng.permutation(len(chains))
    chains = [chains[int(i)] for i in order]

    chains_path = outdir / "chains.jsonl"
    with chains_path.open("w", encoding="utf-8") as out:
        for doc_index in range(spec.documents):
            doc_chains = chains[
                doc_index * spec.chains_per_document : (doc_index + 1)
                * spec.chains_per_document
            ]
            if not doc_chains:
                break
            out.write(
                json.dumps(
                    {"doc_id": f"doc-{doc_index:05d}", "chains": doc_chains},
                    sort_keys=True,
                )
                + "\n"
            )

    embeddings_path = outdir / "embeddings.tsv"
    save_embeddings(embeddings_path, _make_embeddings(taxonomy, rng))

    truth = _truth_ontology(taxonomy)
    truth_ontology_path = outdir / "truth_ontology.json"
    export_json(truth, truth_ontology_path)
    truth_hierarchy_path = outdir / "truth_hierarchy.tsv"
    truth_aliases_path = outdir / "truth_aliases.tsv"
    _write_truth_tsv(taxonomy, truth_hierarchy_path, truth_aliases_path)

    noise_pairs_path = outdir / "noise_pairs.tsv"
    with noise_pairs_path.open("w", encoding="utf-8") as out:
        for a, b in sorted(noise_pairs):
            out.write(f"{a}\t{b}\n")

    strings = len({taxonomy.canonical(a) for group in taxonomy.aliases for a in group})
    return PlantedOutput(
        chains_path=chains_path,
        embeddings_path=embeddings_path,
        truth_ontology_path=truth_ontology_path,
        truth_hierarchy_path=truth_hierarchy_path,
        truth_aliases_path=truth_aliases_path,
        noise_pairs_path=noise_pairs_path,
        concepts=taxonomy.concept_count,
        strings=strings,
        chains=len(chains),
        noise_chains=noise_chains,
        ambiguous_names=[name.lower() for name, _, _ in taxonomy.ambiguous_names],
    )


def _make_embeddings(taxonomy: _Taxonomy, rng: np.random.Generator) -> EmbeddingTable:
    """Unit vectors clustered per concept; within-concept cosine stays
    far above across-concept cosine. A shared ambiguous name sits inside
    its first concept's cluster."""
    dim = 32
    vectors: dict[str, np.ndarray] = {}
    shared_names = {name for name, _, _ in taxonomy.ambiguous_names}
    first_of = {name: a for name, a, _ in taxonomy.ambiguous_names}
    bases = {}
    for concept in range(taxonomy.concept_count):
        base = rng.normal(size=dim)
        bases[concept] = base / np.linalg.norm(base)
    for concept in range(taxonomy.concept_count):
        for surface in taxonomy.aliases[concept]:
            canonical = taxonomy.canonical(surface)
            if canonical in vectors:
                continue
            if surface in shared_names:
                anchor = bases[first_of[surface]]
            else:
                anchor = bases[concept]
            vec = anchor + 0.08 * rng.normal(size=dim)
            vectors[canonical] = vec / np.linalg.norm(vec)
    return EmbeddingTable(dim=dim, vectors=vectors)


def _truth_ontology(taxonomy: _Taxonomy) -> Ontology:
    import hashlib

    concepts = []
    ids = []
    for concept in range(taxonomy.concept_count):
        aliases = tuple(sorted({taxonomy.canonical(a) for a in taxonomy.aliases[concept]}))
        cid = hashlib.sha1("\x1f".join(aliases).encode("utf-8")).hexdigest()[:12]
        ids.append(cid)
        concepts.append(Concept(concept_id=cid, aliases=aliases))
    edges = []
    for child in range(taxonomy.concept_count):
        parent = taxonomy.parent[child]
        if parent is not None:
            edges.append((ids[parent], ids[child]))
    return Ontology(
        concepts=sorted(concepts, key=lambda c: c.concept_id), edges=sorted(edges)
    )


def _write_truth_tsv(
    taxonomy: _Taxonomy, hierarchy_path: Path, aliases_path: Path
) -> None:
    rows = []
    for child in range(taxonomy.concept_count):
        parent = taxonomy.parent[child]
        if parent is None:
            continue
        for child_alias in taxonomy.aliases[child]:
            for parent_alias in taxonomy.aliases[parent]:
                rows.append(
                    (taxonomy.canonical(child_alias), taxonomy.canonical(parent_alias))
                )
    with hierarchy_path.open("w", encoding="utf-8") as out:
        for child_alias, parent_alias in sorted(set(rows)):
            out.write(f"{child_alias}\t{parent_alias}\n")
    with aliases_path.open("w", encoding="utf-8") as out:
        for concept in range(taxonomy.concept_count):
            group = sorted({taxonomy.canonical(a) for a in taxonomy.aliases[concept]})
            out.write("\t".join(group) + "\n")


# ---------------------------------------------------------------------------
# Direct taxonomy graphs for centrality experiments
# ---------------------------------------------------------------------------

def planted_taxonomy_graph(
    depth: int,
    branching: int,
    extra_alias_rate: float = 0.0,
    seed: int = 0,
) -> CorefGraph:
    """Build a taxonomy-shaped CorefGraph directly, skipping the corpus.

    Every concept contributes one primary string linked to its parent's
    primary string; a fraction of concepts gets a secondary alias that
    links to the primary and to a random subset of the primary's
    neighbors, which keeps alias centralities distinct (no exact ties).
    Weights are sampled small integers.
    """
    if depth < 1 or branching < 1:
        raise DataError("depth and branching must be >= 1")
    rng = np.random.default_rng(seed)
    parent: list[int | None] = [None]
    frontier = [0]
    for _ in range(depth):
        nxt = []
        for node in frontier:
            for _ in range(branching):
                parent.append(node)
                nxt.append(len(parent) - 1)
        frontier = nxt
    concepts = len(parent)
    words = _WordMaker(rng)
    primary = [words.word() for _ in range(concepts)]
    phrases = list(primary)
    edges: dict[tuple[int, int], int] = {}

    def add_edge(u: int, v: int, w: int) -> None:
        key = (min(u, v), max(u, v))
        edges[key] = edges.get(key, 0) + w

    for child in range(concepts):
        if parent[child] is None:
            continue
        add_edge(child, parent[child], int(rng.integers(1, 8)))  # type: ignore[arg-type]

    children_of: dict[int, list[int]] = {}
    for child in range(concepts):
        p = parent[child]
        if p is not None:
            children_of.setdefault(p, []).append(child)

    for concept in range(concepts):
        if rng.random() >= extra_alias_rate:
            continue
        alias_id = len(phrases)
        phrases.append(words.word())
        add_edge(concept, alias_id, int(rng.integers(1, 6)))
        linked = []
        p = parent[concept]
        if p is not None:
            linked.append(p)
        linked.extend(children_of.get(concept, []))
        for neighbor in linked:
            if rng.random() < 0.5:
                add_edge(alias_id, neighbor, int(rng.integers(1, 4)))
    sorted_phrases = sorted(range(len(phrases)), key=lambda i: phrases[i])
    remap = {old: new for new, old in enumerate(sorted_phrases)}
    final_edges = [
        (remap[u], remap[v], w) for (u, v), w in edges.items()
    ]
    return CorefGraph([phrases[i] for i in sorted_phrases], final_edges)
