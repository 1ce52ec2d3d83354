"""Materialize the final concept DAG from labeled edges.

Concepts are the connected components of identity edges; hierarchy
edges are lifted to concept level, deduplicated, and verified acyclic.
Concept ids derive from the sorted alias set so exports diff cleanly
across runs.

Export formats:
  json     {"concepts": [{"id": ..., "aliases": [...]}],
            "edges": [["parent_id", "child_id"], ...]}
  edge_tsv parent_alias<TAB>child_alias, expanded pairwise.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .classify import EdgeKind, LabeledGraph
from .errors import DataError, InvariantError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Concept:
    concept_id: str
    aliases: tuple[str, ...]  # sorted, non-empty
    members: tuple[int, ...] = ()  # node ids, sorted; empty after import


@dataclass
class Ontology:
    concepts: list[Concept]
    edges: list[tuple[str, str]]  # (parent_id, child_id), sorted, deduplicated

    def concept_by_id(self, concept_id: str) -> Concept:
        for concept in self.concepts:
            if concept.concept_id == concept_id:
                return concept
        raise KeyError(concept_id)

    def alias_map(self) -> dict[str, list[str]]:
        """alias string -> sorted list of concept ids containing it."""
        out: dict[str, list[str]] = {}
        for concept in self.concepts:
            for alias in concept.aliases:
                out.setdefault(alias, []).append(concept.concept_id)
        for ids in out.values():
            ids.sort()
        return out

    def all_aliases(self) -> set[str]:
        return {a for c in self.concepts for a in c.aliases}

    def validate(self) -> None:
        ids = [c.concept_id for c in self.concepts]
        if len(set(ids)) != len(ids):
            raise InvariantError("duplicate concept ids")
        known = set(ids)
        for parent, child in self.edges:
            if parent == child:
                raise InvariantError(f"self-edge on concept {parent}")
            if parent not in known or child not in known:
                raise InvariantError(f"edge ({parent},{child}) references unknown concept")
        topological_order(self)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _concept_id(aliases: tuple[str, ...], salt: int = 0) -> str:
    payload = "\x1f".join(aliases)
    if salt:
        payload += f"\x1e{salt}"
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:12]


def collapse_identity(lg: LabeledGraph) -> tuple[list[Concept], dict[int, str]]:
    """Concepts = connected components under identity edges.

    Returns the concepts plus a node id -> concept id map. Nodes with no
    identity edges become singleton concepts. Two concepts ending up
    with the same alias set (possible after splits) get disambiguated
    deterministically by their smallest member node id.
    """
    uf = _UnionFind(lg.node_count)
    for e in lg.edges:
        if e.kind is EdgeKind.IDENTITY:
            uf.union(e.u, e.v)
    groups: dict[int, list[int]] = {}
    for node in range(lg.node_count):
        groups.setdefault(uf.find(node), []).append(node)
    components = sorted(groups.values(), key=lambda g: g[0])

    concepts: list[Concept] = []
    node_to_cid: dict[int, str] = {}
    seen_ids: dict[str, int] = {}
    for members in components:
        aliases = tuple(sorted({lg.phrases[m] for m in members}))
        base = _concept_id(aliases)
        salt = seen_ids.get(base, 0)
        cid = base if salt == 0 else _concept_id(aliases, salt=salt)
        seen_ids[base] = salt + 1
        concepts.append(
            Concept(concept_id=cid, aliases=aliases, members=tuple(members))
        )
        for member in members:
            node_to_cid[member] = cid
    return concepts, node_to_cid


def lift_hierarchy(
    lg: LabeledGraph,
    concepts: list[Concept],
    node_to_cid: dict[int, str],
) -> Ontology:
    """Map node-level hierarchy edges onto concepts and verify the DAG.

    Edges internal to one concept indicate a label conflict and are
    dropped with a warning; duplicates collapse to one concept edge.
    A concept-level cycle is fatal and reported with its member chain.
    """
    edge_set: set[tuple[str, str]] = set()
    internal = 0
    for e in lg.edges:
        if e.kind is not EdgeKind.HIERARCHY or e.parent is None:
            continue
        child = e.child
        assert child is not None
        parent_cid = node_to_cid[e.parent]
        child_cid = node_to_cid[child]
        if parent_cid == child_cid:
            internal += 1
            continue
        edge_set.add((parent_cid, child_cid))
    if internal:
        log.warning(
            "%d hierarchy edges were internal to a concept and dropped", internal
        )
    ontology = Ontology(concepts=list(concepts), edges=sorted(edge_set))
    topological_order(ontology)  # raises on cycles
    return ontology


def topological_order(ontology: Ontology) -> list[str]:
    """Kahn topological sort; raises InvariantError with a cycle report."""
    indegree = {c.concept_id: 0 for c in ontology.concepts}
    children: dict[str, list[str]] = {c.concept_id: [] for c in ontology.concepts}
    for parent, child in ontology.edges:
        children[parent].append(child)
        indegree[child] += 1
    ready = sorted(cid for cid, deg in indegree.items() if deg == 0)
    order: list[str] = []
    while ready:
        cid = ready.pop(0)
        order.append(cid)
        for nxt in sorted(children[cid]):
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
        ready.sort()
    if len(order) != len(ontology.concepts):
        stuck = sorted(cid for cid, deg in indegree.items() if deg > 0)
        raise InvariantError(
            f"concept hierarchy contains a cycle through {len(stuck)} concepts: "
            + ", ".join(stuck[:10])
        )
    return order


def transitive_reduction(ontology: Ontology) -> Ontology:
    """Drop edges implied by longer directed paths."""
    children: dict[str, set[str]] = {c.concept_id: set() for c in ontology.concepts}
    for parent, child in ontology.edges:
        children[parent].add(child)
    order = topological_order(ontology)
    # descendants via reverse topological accumulation
    descendants: dict[str, set[str]] = {cid: set() for cid in children}
    for cid in reversed(order):
        for child in children[cid]:
            descendants[cid].add(child)
            descendants[cid] |= descendants[child]
    kept = []
    for parent, child in ontology.edges:
        if any(
            child in descendants[mid] for mid in children[parent] if mid != child
        ):
            continue
        kept.append((parent, child))
    return Ontology(concepts=list(ontology.concepts), edges=sorted(kept))


# ---------------------------------------------------------------------------
# Export / import
# ---------------------------------------------------------------------------

def export_json(ontology: Ontology, path: Path) -> None:
    payload = {
        "concepts": [
            {"id": c.concept_id, "aliases": list(c.aliases)}
            for c in sorted(ontology.concepts, key=lambda c: c.concept_id)
        ],
        "edges": [list(edge) for edge in sorted(ontology.edges)],
    }
    with Path(path).open("w", encoding="utf-8") as out:
        json.dump(payload, out, indent=2, sort_keys=True)
        out.write("\n")


def import_json(path: Path) -> Ontology:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read ontology file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    try:
        concepts = [
            Concept(concept_id=c["id"], aliases=tuple(sorted(c["aliases"])))
            for c in payload["concepts"]
        ]
        edges = [(str(p), str(c)) for p, c in payload["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed ontology payload: {exc}") from exc
    ontology = Ontology(
        concepts=sorted(concepts, key=lambda c: c.concept_id), edges=sorted(set(edges))
    )
    ontology.validate()
    return ontology


def export_edge_tsv(ontology: Ontology, path: Path) -> None:
    by_id = {c.concept_id: c for c in ontology.concepts}
    rows = []
    for parent, child in ontology.edges:
        for parent_alias in by_id[parent].aliases:
            for child_alias in by_id[child].aliases:
                rows.append((parent_alias, child_alias))
    with Path(path).open("w", encoding="utf-8") as out:
        for parent_alias, child_alias in sorted(rows):
            out.write(f"{parent_alias}\t{child_alias}\n")


def export(ontology: Ontology, path: Path, format: str = "json") -> None:
    if format == "json":
        export_json(ontology, path)
    elif format == "edge_tsv":
        export_edge_tsv(ontology, path)
    else:
        raise DataError(f"unsupported export format: {format!r}")
