"""Resolve name nodes that behave hierarchically over their children.

For every name node with hierarchy children, the node and its children
are embedded, linked into a symmetrized k-nearest-neighbor subgraph and
clustered with Louvain. A single community means the children are
aliases of the name (the hierarchy edges become identity); multiple
communities mean the name string covers several senses, so the node is
split, one new node per community, each aliased to its community's
children and inheriting only the parents it shares with them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .classify import EdgeKind, LabeledEdge, LabeledGraph
from .community import louvain
from .embeddings import EmbeddingTable
from .errors import InvariantError

log = logging.getLogger(__name__)


@dataclass
class SenseSplitTask:
    parent: int
    children: list[int]


def select_tasks(lg: LabeledGraph) -> list[SenseSplitTask]:
    """One task per name node with at least one hierarchy child,
    in ascending node id order."""
    tasks = []
    for node in range(lg.node_count):
        if not lg.is_name[node]:
            continue
        children = lg.hierarchy_children(node)
        if children:
            tasks.append(SenseSplitTask(parent=node, children=children))
    return tasks


def build_knn_subgraph(
    members: list[int],
    vectors: list[np.ndarray],
    k_nn: int,
    weighted: bool = False,
) -> list[tuple[int, int, float]]:
    """Symmetrized k-nearest-neighbor edges over local indices.

    Each member points at its k_nn most cosine-similar peers (k capped
    at len(members) - 1); the union of directed picks becomes an
    undirected edge list. Ties in similarity break toward the smaller
    local index. Unweighted edges carry weight 1.0; the weighted variant
    uses the cosine similarity clipped at zero.
    """
    size = len(members)
    if size < 2:
        return []
    k = min(k_nn, size - 1)
    if k < 1:
        return []
    matrix = np.stack(vectors).astype(np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    norms[norms == 0.0] = 1.0
    unit = matrix / norms[:, None]
    sims = unit @ unit.T
    picked: set[tuple[int, int]] = set()
    for i in range(size):
        order = sorted(
            (j for j in range(size) if j != i),
            key=lambda j: (-sims[i, j], j),
        )
        for j in order[:k]:
            picked.add((min(i, j), max(i, j)))
    edges = []
    for i, j in sorted(picked):
        weight = max(float(sims[i, j]), 0.0) if weighted else 1.0
        edges.append((i, j, weight))
    return edges


@dataclass
class SenseSummary:
    tasks: int = 0
    merged: int = 0
    split: int = 0
    skipped_missing_embedding: int = 0
    new_nodes: int = 0
    duplicated_parent_edges: int = 0
    dropped_parent_edges: int = 0

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def apply_split(
    lg: LabeledGraph,
    task: SenseSplitTask,
    communities: list[list[int]],
    summary: SenseSummary | None = None,
) -> None:
    """Rewrite the task's edges according to the detected communities.

    ``communities`` partitions {parent} + children (node ids). With one
    community the parent-child hierarchy edges are relabeled identity;
    with several, the parent is split into one node per community.
    """
    if summary is None:
        summary = SenseSummary()
    n = task.parent
    universe = {n, *task.children}
    covered = [node for community in communities for node in community]
    if sorted(covered) != sorted(universe):
        raise InvariantError("communities do not partition the task's node set")

    child_edges = [
        e
        for e in lg.edges
        if e.kind is EdgeKind.HIERARCHY and e.parent == n and e.child in universe
    ]
    if len(communities) == 1:
        for e in child_edges:
            e.kind = EdgeKind.IDENTITY
            e.parent = None
        summary.merged += 1
        return

    parent_edges = [e for e in lg.edges if e.kind is EdgeKind.HIERARCHY and e.child == n]
    claimed = {id(e) for e in child_edges} | {id(e) for e in parent_edges}
    other_edges = [
        e for e in lg.edges if n in e.endpoints() and id(e) not in claimed
    ]

    n_parents = {e.parent for e in parent_edges}

    split_ids = []
    for community in communities:
        split = lg.add_node(lg.phrases[n], lg.is_name[n], origin=lg.origins[n])
        split_ids.append((split, community))
    summary.split += 1
    summary.new_nodes += len(split_ids)

    # Re-attach child edges as identity edges on the matching split node.
    community_of = {}
    for split, community in split_ids:
        for member in community:
            community_of[member] = split
    for e in child_edges:
        child = e.child
        assert child is not None
        split = community_of[child]
        e.kind = EdgeKind.IDENTITY
        e.parent = None
        _reattach(e, n, split)

    # Parent edges: each split inherits only the parents shared with its
    # community's children; extra copies are added when several splits
    # inherit the same parent, and uninherited evidence is logged.
    for e in parent_edges:
        keepers = []
        for split, community in split_ids:
            community_child_parents = set()
            for member in community:
                if member == n:
                    continue
                community_child_parents.update(lg.hierarchy_parents(member))
            if e.parent in n_parents and e.parent in community_child_parents:
                keepers.append(split)
        if not keepers:
            log.warning(
                "split of node %d: parent edge (%s -> %d) shared with no "
                "community; dropped",
                n,
                e.parent,
                n,
            )
            summary.dropped_parent_edges += 1
            lg.edges[:] = [other for other in lg.edges if other is not e]
            continue
        _reattach(e, n, keepers[0])
        for split in keepers[1:]:
            extra_u, extra_v = sorted((e.parent, split))  # type: ignore[arg-type]
            lg.edges.append(
                LabeledEdge(extra_u, extra_v, e.weight, EdgeKind.HIERARCHY, e.parent)
            )
            summary.duplicated_parent_edges += 1

    # Any other edge incident to the old node (should not occur in the
    # pipeline) sticks with the first split so no evidence disappears.
    for e in other_edges:
        log.warning(
            "split of node %d: unexpected %s edge (%d,%d) moved to first split",
            n,
            e.kind.value,
            e.u,
            e.v,
        )
        _reattach(e, n, split_ids[0][0])


def _reattach(edge: LabeledEdge, old: int, new: int) -> None:
    u, v = edge.endpoints()
    other = v if u == old else u
    parent_was_old = edge.parent == old
    edge.u, edge.v = min(other, new), max(other, new)
    if edge.kind is EdgeKind.HIERARCHY:
        edge.parent = new if parent_was_old else edge.parent


def resolve_senses(
    lg: LabeledGraph,
    embeddings: EmbeddingTable,
    k_nn: int = 5,
    weighted: bool = False,
    seed: int = 0,
) -> SenseSummary:
    """Run the split/merge procedure over every selected task.

    Tasks are processed in ascending parent id; children are re-read at
    execution time because earlier tasks may have rewritten them. Tasks
    whose members lack embeddings are skipped with a warning, leaving
    their provisional hierarchy labels in place.
    """
    summary = SenseSummary()
    for task in select_tasks(lg):
        children = lg.hierarchy_children(task.parent)
        if not children:
            continue  # rewritten by an earlier task
        task = SenseSplitTask(parent=task.parent, children=children)
        summary.tasks += 1
        members = [task.parent, *task.children]
        vectors = []
        missing = None
        for node in members:
            vec = embeddings.get(lg.phrases[node])
            if vec is None:
                missing = lg.phrases[node]
                break
            vectors.append(vec)
        if missing is not None:
            log.warning(
                "sense task for node %d skipped: no embedding for %r",
                task.parent,
                missing,
            )
            summary.skipped_missing_embedding += 1
            continue
        edges = build_knn_subgraph(members, vectors, k_nn, weighted=weighted)
        result = louvain(len(members), edges, seed=seed)
        communities = [[members[i] for i in comm] for comm in result.communities]
        apply_split(lg, task, communities, summary)
    return summary
