"""Undirected weighted phrase co-occurrence graph.

Node ids are dense integers assigned by sorted phrase order at seal
time, so the same chain multiset always produces the same graph no
matter how the chains were ordered. The graph is immutable once built;
downstream stages keep their labels in side tables.

Snapshot format (text, documented for CLI interop):

    ontoforge-graph 1
    nodes <N>
    <id>\t<phrase>          (N lines, ids 0..N-1 in order)
    edges <M>
    <u> <v> <w>             (M lines, u < v, ascending)
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from scipy import sparse

from .errors import DataError, InvariantError

_MAGIC = "ontoforge-graph 1"


class CorefGraph:
    """Sealed co-occurrence graph with CSR adjacency."""

    def __init__(self, phrases: list[str], edges: list[tuple[int, int, int]]):
        self.phrases: tuple[str, ...] = tuple(phrases)
        self._id_of = {p: i for i, p in enumerate(self.phrases)}
        if len(self._id_of) != len(self.phrases):
            raise InvariantError("duplicate phrase in node table")
        n = len(self.phrases)
        for u, v, w in edges:
            if u == v:
                raise InvariantError(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvariantError(f"edge ({u},{v}) outside node range")
            if w < 1:
                raise InvariantError(f"edge ({u},{v}) has weight {w} < 1")
        self._edges = sorted((min(u, v), max(u, v), w) for u, v, w in edges)
        if len({(u, v) for u, v, _ in self._edges}) != len(self._edges):
            raise InvariantError("duplicate edge in edge list")
        self._build_csr()

    def _build_csr(self) -> None:
        n = self.node_count
        m = len(self._edges)
        rows = np.empty(2 * m, dtype=np.int64)
        cols = np.empty(2 * m, dtype=np.int64)
        vals = np.empty(2 * m, dtype=np.int64)
        for i, (u, v, w) in enumerate(self._edges):
            rows[2 * i], cols[2 * i], vals[2 * i] = u, v, w
            rows[2 * i + 1], cols[2 * i + 1], vals[2 * i + 1] = v, u, w
        self._weighted = sparse.csr_matrix(
            (vals, (rows, cols)), shape=(n, n), dtype=np.int64
        )
        # 0/1 adjacency used for unweighted shortest-path sweeps.
        self._adjacency = sparse.csr_matrix(
            (np.ones(2 * m), (rows, cols)), shape=(n, n), dtype=np.float64
        )

    # -- basic accessors ----------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.phrases)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def id_of(self, phrase: str) -> int:
        return self._id_of[phrase]

    def phrase_of(self, node: int) -> str:
        return self.phrases[node]

    def __contains__(self, phrase: str) -> bool:
        return phrase in self._id_of

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield (u, v, w) with u < v, in ascending order."""
        return iter(self._edges)

    def neighbors_of(self, node: int) -> list[tuple[int, int]]:
        """Sorted (neighbor, weight) pairs."""
        row = self._weighted.getrow(node)
        return sorted(zip(row.indices.tolist(), row.data.tolist()))

    def weighted_degree(self, node: int) -> int:
        return int(self._weighted.getrow(node).data.sum())

    def adjacency(self) -> sparse.csr_matrix:
        """0/1 adjacency matrix (float64) for BFS sweeps."""
        return self._adjacency

    # -- snapshot -----------------------------------------------------------

    def save(self, path: Path) -> None:
        with Path(path).open("w", encoding="utf-8") as out:
            out.write(_MAGIC + "\n")
            out.write(f"nodes {self.node_count}\n")
            for i, phrase in enumerate(self.phrases):
                out.write(f"{i}\t{phrase}\n")
            out.write(f"edges {self.edge_count}\n")
            for u, v, w in self._edges:
                out.write(f"{u} {v} {w}\n")

    @classmethod
    def load(cls, path: Path) -> "CorefGraph":
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise DataError(f"cannot read graph snapshot {path}: {exc}") from exc
        if not lines or lines[0] != _MAGIC:
            raise DataError(f"{path}: not an ontoforge graph snapshot")
        try:
            n = int(lines[1].split()[1])
            phrases = []
            for i in range(n):
                ident, phrase = lines[2 + i].split("\t", 1)
                if int(ident) != i:
                    raise DataError(f"{path}: node ids not dense/ordered")
                phrases.append(phrase)
            m_line = 2 + n
            m = int(lines[m_line].split()[1])
            edges = []
            for i in range(m):
                u, v, w = lines[m_line + 1 + i].split()
                edges.append((int(u), int(v), int(w)))
        except (IndexError, ValueError) as exc:
            raise DataError(f"{path}: malformed graph snapshot: {exc}") from exc
        return cls(phrases, edges)


def build_graph(chains: Iterable[list[str]]) -> CorefGraph:
    """Count chain co-occurrences into an undirected weighted graph.

    Each chain contributes one unit of weight to every unordered pair of
    distinct phrases it contains.
    """
    pair_weights: Counter[tuple[str, str]] = Counter()
    seen: set[str] = set()
    for chain in chains:
        # Chains are deduplicated upstream; dedupe again defensively while
        # preserving order so malformed input cannot create self-loops.
        distinct = list(dict.fromkeys(chain))
        seen.update(distinct)
        for i in range(len(distinct)):
            for j in range(i + 1, len(distinct)):
                a, b = distinct[i], distinct[j]
                pair_weights[(a, b) if a < b else (b, a)] += 1
    phrases = sorted(seen)
    index = {p: i for i, p in enumerate(phrases)}
    edges = [(index[a], index[b], w) for (a, b), w in pair_weights.items()]
    return CorefGraph(phrases, edges)


@dataclass
class DegreeStats:
    node_count: int
    edge_count: int
    weight_histogram: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "weight_histogram": {str(k): v for k, v in sorted(self.weight_histogram.items())},
        }


def degree_stats(g: CorefGraph) -> DegreeStats:
    histogram: Counter[int] = Counter(w for _, _, w in g.edges())
    return DegreeStats(
        node_count=g.node_count,
        edge_count=g.edge_count,
        weight_histogram=dict(histogram),
    )
