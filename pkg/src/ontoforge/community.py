"""Louvain community detection on small undirected subgraphs.

Deterministic variant: nodes are scanned in ascending id and moved to
the first neighboring community whose modularity gain strictly beats
staying put, then communities are aggregated and the process repeats.
Modularity after each local-move pass is recorded; the sequence is
non-decreasing because only strictly improving moves are taken.
"""

from __future__ import annotations

from dataclasses import dataclass

_EPS = 1e-12


@dataclass
class LouvainResult:
    communities: list[list[int]]
    modularity_trace: list[float]
    modularity: float


def modularity(
    n: int, edges: list[tuple[int, int, float]], partition: list[int]
) -> float:
    """Newman modularity of a partition (list: node -> community id)."""
    m = sum(w for _, _, w in edges)
    if m <= 0.0:
        return 0.0
    intra: dict[int, float] = {}
    degree_tot: dict[int, float] = {}
    degree = [0.0] * n
    for u, v, w in edges:
        degree[u] += w
        degree[v] += w
        if partition[u] == partition[v]:
            intra[partition[u]] = intra.get(partition[u], 0.0) + w
    for node in range(n):
        c = partition[node]
        degree_tot[c] = degree_tot.get(c, 0.0) + degree[node]
    q = 0.0
    for c in set(partition):
        q += intra.get(c, 0.0) / m - (degree_tot.get(c, 0.0) / (2.0 * m)) ** 2
    return q


def _local_moves(
    n: int,
    neighbors: list[dict[int, float]],
    self_loops: list[float],
    m: float,
) -> tuple[list[int], bool]:
    """One level of the local-move phase; returns (partition, any_move)."""
    community = list(range(n))
    comm_tot = [self_loops[i] * 2.0 + sum(neighbors[i].values()) for i in range(n)]
    degree = list(comm_tot)
    moved_any = False
    while True:
        moved = False
        for node in range(n):
            old = community[node]
            links: dict[int, float] = {}
            for nb, w in neighbors[node].items():
                links[community[nb]] = links.get(community[nb], 0.0) + w
            comm_tot[old] -= degree[node]
            base_gain = links.get(old, 0.0) / m - comm_tot[old] * degree[node] / (
                2.0 * m * m
            )
            target = old
            # First neighboring community (ascending id) that strictly
            # improves over returning to the current one.
            for cand in sorted(links):
                if cand == old:
                    continue
                gain = links[cand] / m - comm_tot[cand] * degree[node] / (2.0 * m * m)
                if gain > base_gain + _EPS:
                    target = cand
                    break
            community[node] = target
            comm_tot[target] += degree[node]
            if target != old:
                moved = True
                moved_any = True
        if not moved:
            return community, moved_any


def louvain(
    n: int, edges: list[tuple[int, int, float]], seed: int = 0
) -> LouvainResult:
    """Partition nodes 0..n-1 into communities.

    ``seed`` is accepted for interface stability; this implementation is
    fully deterministic and does not consume randomness.
    """
    del seed
    if n == 0:
        return LouvainResult([], [], 0.0)
    m = sum(w for _, _, w in edges)
    if m <= 0.0:
        return LouvainResult([[i] for i in range(n)], [0.0], 0.0)

    # membership[i] = original nodes currently aggregated into node i
    membership: list[list[int]] = [[i] for i in range(n)]
    neighbors: list[dict[int, float]] = [dict() for _ in range(n)]
    self_loops = [0.0] * n
    for u, v, w in edges:
        if u == v:
            self_loops[u] += w
            continue
        neighbors[u][v] = neighbors[u].get(v, 0.0) + w
        neighbors[v][u] = neighbors[v].get(u, 0.0) + w

    trace: list[float] = []
    while True:
        size = len(membership)
        partition, improved = _local_moves(size, neighbors, self_loops, m)
        flat = _flatten(partition, membership, n)
        trace.append(modularity_from_membership(n, edges, flat))
        if not improved:
            break
        # Aggregate communities into super-nodes.
        ids = sorted(set(partition))
        remap = {c: i for i, c in enumerate(ids)}
        new_membership: list[list[int]] = [[] for _ in ids]
        for node, c in enumerate(partition):
            new_membership[remap[c]].extend(membership[node])
        new_neighbors: list[dict[int, float]] = [dict() for _ in ids]
        new_self = [0.0] * len(ids)
        for node in range(size):
            cu = remap[partition[node]]
            new_self[cu] += self_loops[node]
            for nb, w in neighbors[node].items():
                cv = remap[partition[nb]]
                if cu == cv:
                    new_self[cu] += w / 2.0
                else:
                    new_neighbors[cu][cv] = new_neighbors[cu].get(cv, 0.0) + w
        membership = new_membership
        neighbors = new_neighbors
        self_loops = new_self

    communities = [sorted(members) for members in membership]
    communities.sort(key=lambda c: c[0])
    return LouvainResult(
        communities=communities,
        modularity_trace=trace,
        modularity=trace[-1] if trace else 0.0,
    )


def _flatten(
    partition: list[int], membership: list[list[int]], n: int
) -> list[int]:
    flat = [0] * n
    for node, c in enumerate(partition):
        for original in membership[node]:
            flat[original] = c
    return flat


def modularity_from_membership(
    n: int, edges: list[tuple[int, int, float]], flat: list[int]
) -> float:
    return modularity(n, edges, flat)
