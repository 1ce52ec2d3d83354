"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

from collections import deque

import numpy as np
import pytest

from ontoforge.graph import CorefGraph
from ontoforge.ingest import load_stoplists


@pytest.fixture(scope="session")
def stoplists():
    return load_stoplists()


def brute_force_betweenness(g: CorefGraph) -> np.ndarray:
    """Direct evaluation of the betweenness definition: per node pair,
    count shortest paths through each interior node from BFS distance
    and path-count tables. Independent of the Brandes accumulation."""
    n = g.node_count
    adjacency = [[] for _ in range(n)]
    for u, v, _ in g.edges():
        adjacency[u].append(v)
        adjacency[v].append(u)
    dist = np.full((n, n), -1, dtype=np.int64)
    sigma = np.zeros((n, n), dtype=np.float64)
    for s in range(n):
        dist[s][s] = 0
        sigma[s][s] = 1
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y in adjacency[x]:
                if dist[s][y] < 0:
                    dist[s][y] = dist[s][x] + 1
                    queue.append(y)
                if dist[s][y] == dist[s][x] + 1:
                    sigma[s][y] += sigma[s][x]
    scores = np.zeros(n, dtype=np.float64)
    for s in range(n):
        for t in range(s + 1, n):
            if dist[s][t] < 0:
                continue
            for v in range(n):
                if v in (s, t) or dist[s][v] < 0 or dist[v][t] < 0:
                    continue
                if dist[s][v] + dist[v][t] == dist[s][t]:
                    scores[v] += sigma[s][v] * sigma[v][t] / sigma[s][t]
    return scores


def random_graph(rng: np.random.Generator, max_nodes: int = 50) -> CorefGraph:
    n = int(rng.integers(2, max_nodes + 1))
    p = float(rng.uniform(0.05, 0.5))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, int(rng.integers(1, 5))))
    phrases = [f"node{i:04d}" for i in range(n)]
    return CorefGraph(phrases, edges)


def set_partitions(items: list):
    """All partitions of a small list (Bell-number growth; keep |items| <= 9)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1 :]
        yield [[first]] + partition
