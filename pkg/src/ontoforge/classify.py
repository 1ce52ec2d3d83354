"""Label co-occurrence edges as identity, hierarchy or noise.

The zero-centrality rule marks leaf-leaf edges as identity; everything
else becomes a provisional hierarchy edge directed from the higher- to
the lower-centrality endpoint. Name/noun direction correction then
reverses hierarchy edges that point from a name to a noun (names are
more specific than general nouns), and PMI filtering relabels edges
whose association is weaker than chance as noise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .centrality import EdgeOrder, OrderKind, order_edges
from .errors import DataError, InvariantError
from .graph import CorefGraph
from .ingest import Phrase

log = logging.getLogger(__name__)


class EdgeKind(Enum):
    IDENTITY = "IDENTITY"
    HIERARCHY = "HIERARCHY"
    NOISE = "NOISE"


@dataclass
class LabeledEdge:
    """One undirected evidence edge plus its current label.

    ``u < v`` always; for hierarchy edges ``parent`` is one of the two
    endpoints and the edge reads parent IS-A-above child.
    """

    u: int
    v: int
    weight: int
    kind: EdgeKind
    parent: Optional[int] = None

    @property
    def child(self) -> Optional[int]:
        if self.kind is not EdgeKind.HIERARCHY or self.parent is None:
            return None
        return self.v if self.parent == self.u else self.u

    def endpoints(self) -> tuple[int, int]:
        return self.u, self.v


@dataclass
class LabeledGraph:
    """Node table plus labeled edges; grows when names are split."""

    phrases: list[str]
    is_name: list[bool]
    edges: list[LabeledEdge]
    origins: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.origins:
            self.origins = list(range(len(self.phrases)))

    @property
    def node_count(self) -> int:
        return len(self.phrases)

    def add_node(self, phrase: str, is_name: bool, origin: int) -> int:
        self.phrases.append(phrase)
        self.is_name.append(is_name)
        self.origins.append(origin)
        return len(self.phrases) - 1

    def hierarchy_children(self, node: int) -> list[int]:
        out = [
            e.child
            for e in self.edges
            if e.kind is EdgeKind.HIERARCHY and e.parent == node
        ]
        return sorted(c for c in out if c is not None)

    def hierarchy_parents(self, node: int) -> list[int]:
        out = [
            e.parent
            for e in self.edges
            if e.kind is EdgeKind.HIERARCHY and e.child == node
        ]
        return sorted(p for p in out if p is not None)


def name_tags(
    phrases: tuple[str, ...] | list[str],
    table: dict[str, Phrase],
    threshold: float = 0.9,
) -> list[bool]:
    """A node is a name when its mentions were consistently capitalized."""
    if not 0.0 < threshold <= 1.0:
        raise DataError(f"name threshold must be in (0, 1], got {threshold}")
    tags = []
    for phrase in phrases:
        stats = table.get(phrase)
        tags.append(stats is not None and stats.capitalized_ratio >= threshold)
    return tags


def label_identity_zero_bc(
    g: CorefGraph,
    scores: np.ndarray,
    is_name: list[bool],
    orders: Optional[list[EdgeOrder]] = None,
) -> LabeledGraph:
    """Initial labels: both-zero edges are identity, the rest hierarchy.

    Nonzero ties are broken toward the endpoint with the higher weighted
    degree as parent, then toward the lexicographically smaller phrase,
    so the labeling is deterministic.
    """
    if orders is None:
        orders = order_edges(g, scores)
    weights = {(u, v): w for u, v, w in g.edges()}
    edges: list[LabeledEdge] = []
    for order in orders:
        w = weights[(order.u, order.v)]
        if order.kind == OrderKind.BOTH_ZERO:
            edges.append(LabeledEdge(order.u, order.v, w, EdgeKind.IDENTITY))
        elif order.kind == OrderKind.DIRECTED:
            edges.append(
                LabeledEdge(order.u, order.v, w, EdgeKind.HIERARCHY, parent=order.hi)
            )
        else:
            du, dv = g.weighted_degree(order.u), g.weighted_degree(order.v)
            if du != dv:
                parent = order.u if du > dv else order.v
            elif g.phrase_of(order.u) < g.phrase_of(order.v):
                parent = order.u
            else:
                parent = order.v
            edges.append(
                LabeledEdge(order.u, order.v, w, EdgeKind.HIERARCHY, parent=parent)
            )
    return LabeledGraph(
        phrases=list(g.phrases), is_name=list(is_name), edges=edges
    )


def correct_name_direction(lg: LabeledGraph) -> int:
    """Reverse hierarchy edges that point from a name to a noun.

    Returns the number of reversals.
    """
    reversed_count = 0
    for edge in lg.edges:
        if edge.kind is not EdgeKind.HIERARCHY or edge.parent is None:
            continue
        child = edge.child
        assert child is not None
        if lg.is_name[edge.parent] and not lg.is_name[child]:
            edge.parent = child
            reversed_count += 1
    return reversed_count


# ---------------------------------------------------------------------------
# PMI
# ---------------------------------------------------------------------------

@dataclass
class PmiStats:
    """Co-occurrence participation counts backing the PMI computation.

    count(phrase) is the sum of the phrase's edge weights; both the
    joint and the marginal probabilities are normalized by the same
    total, the sum of all per-phrase counts.
    """

    counts: dict[int, int]
    pair_counts: dict[tuple[int, int], int]
    total: int

    @classmethod
    def from_edges(cls, edges: list[LabeledEdge]) -> "PmiStats":
        counts: dict[int, int] = {}
        pair_counts: dict[tuple[int, int], int] = {}
        for e in edges:
            counts[e.u] = counts.get(e.u, 0) + e.weight
            counts[e.v] = counts.get(e.v, 0) + e.weight
            pair_counts[(e.u, e.v)] = pair_counts.get((e.u, e.v), 0) + e.weight
        return cls(counts=counts, pair_counts=pair_counts, total=sum(counts.values()))


def compute_pmi(stats: PmiStats, u: int, v: int) -> float:
    """Pointwise mutual information of a connected pair.

    PMI = log( P(u,v) / (P(u) * P(v)) ) with P(x) = count(x) / total and
    P(u,v) = pair_count(u,v) / total. Natural log.
    """
    if stats.total <= 0:
        raise DataError("PMI undefined: total co-occurrence count is zero")
    key = (u, v) if u < v else (v, u)
    pair = stats.pair_counts.get(key, 0)
    cu, cv = stats.counts.get(u, 0), stats.counts.get(v, 0)
    if pair < 1 or cu < 1 or cv < 1:
        raise DataError(f"PMI undefined for pair ({u},{v}): zero count")
    # Algebraically log((pair/T) / ((cu/T)(cv/T))); the integer form is
    # exact at the independence point pair * T == cu * cv.
    return math.log(pair * stats.total / (cu * cv))


def filter_noise(
    lg: LabeledGraph,
    stats: Optional[PmiStats] = None,
    threshold: float = 0.0,
) -> int:
    """Relabel edges with PMI below the threshold as noise.

    The comparison is strict, so PMI exactly at the threshold keeps its
    label. Returns the number of relabeled edges.
    """
    if stats is None:
        stats = PmiStats.from_edges(lg.edges)
    relabeled = 0
    for edge in lg.edges:
        if compute_pmi(stats, edge.u, edge.v) < threshold:
            edge.kind = EdgeKind.NOISE
            edge.parent = None
            relabeled += 1
    return relabeled


# ---------------------------------------------------------------------------
# Finalize: counts, acyclicity check, cycle repair
# ---------------------------------------------------------------------------

@dataclass
class LabelSummary:
    identity: int
    hierarchy: int
    noise: int
    total: int
    cycle_repairs: list[tuple[int, int]]

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "hierarchy": self.hierarchy,
            "noise": self.noise,
            "total": self.total,
            "cycle_repairs": [list(pair) for pair in self.cycle_repairs],
        }


def _find_cycle(node_count: int, out_edges: dict[int, list[int]]) -> Optional[list[int]]:
    """Return one directed cycle as a node list, or None. Iterative DFS."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = [WHITE] * node_count
    parent: dict[int, int] = {}
    for root in range(node_count):
        if color[root] != WHITE:
            continue
        stack: list[tuple[int, int]] = [(root, 0)]
        color[root] = GRAY
        while stack:
            node, idx = stack[-1]
            targets = out_edges.get(node, [])
            if idx < len(targets):
                stack[-1] = (node, idx + 1)
                nxt = targets[idx]
                if color[nxt] == GRAY:
                    cycle = [nxt, node]
                    cur = node
                    while cur != nxt:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.pop()  # nxt was appended twice
                    cycle.reverse()
                    return cycle
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    parent[nxt] = node
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()
    return None


def repair_hierarchy_cycles(lg: LabeledGraph) -> list[tuple[int, int]]:
    """Reverse the minimum-weight edge of each directed hierarchy cycle
    until the hierarchy subgraph is acyclic. Returns the flipped edges.

    An edge is min-weight-flipped at most once; overlapping cycles could
    otherwise flip the same edge back and forth forever. A cycle made
    entirely of already-flipped edges falls back to pointing its edges
    from the smaller to the larger node id, which strictly shrinks the
    number of id-descending edges, so the loop always terminates.
    """
    repairs: list[tuple[int, int]] = []
    flipped: set[int] = set()
    limit = max(100, 4 * len(lg.edges))
    while True:
        out_edges: dict[int, list[int]] = {}
        edge_index: dict[tuple[int, int], LabeledEdge] = {}
        for e in lg.edges:
            if e.kind is not EdgeKind.HIERARCHY or e.parent is None:
                continue
            child = e.child
            assert child is not None
            out_edges.setdefault(e.parent, []).append(child)
            edge_index[(e.parent, child)] = e
        for targets in out_edges.values():
            targets.sort()
        cycle = _find_cycle(lg.node_count, out_edges)
        if cycle is None:
            return repairs
        if len(repairs) >= limit:
            raise InvariantError(
                f"cycle repair did not converge after {limit} reversals"
            )
        cycle_edges = [
            edge_index[(cycle[i], cycle[(i + 1) % len(cycle)])]
            for i in range(len(cycle))
        ]
        fresh = [e for e in cycle_edges if id(e) not in flipped]
        if fresh:
            victim = min(fresh, key=lambda e: (e.weight, e.u, e.v))
            child = victim.child
            assert child is not None
            log.warning(
                "hierarchy cycle through %d nodes; reversing edge (%s -> %d, w=%d)",
                len(cycle),
                victim.parent,
                child,
                victim.weight,
            )
            victim.parent = child
            flipped.add(id(victim))
            repairs.append((victim.u, victim.v))
            continue
        log.warning(
            "cycle through %d nodes consists of previously flipped edges; "
            "aligning it to ascending node ids",
            len(cycle),
        )
        for e in cycle_edges:
            if e.parent != e.u:
                e.parent = e.u
                repairs.append((e.u, e.v))


def finalize(lg: LabeledGraph) -> LabelSummary:
    """Count labels, verify exhaustiveness and repair hierarchy cycles."""
    counts = {EdgeKind.IDENTITY: 0, EdgeKind.HIERARCHY: 0, EdgeKind.NOISE: 0}
    for e in lg.edges:
        if e.kind is None or e.kind not in counts:
            raise InvariantError(f"edge ({e.u},{e.v}) is unlabeled")
        if e.kind is EdgeKind.HIERARCHY and e.parent not in (e.u, e.v):
            raise InvariantError(f"hierarchy edge ({e.u},{e.v}) lacks a direction")
        counts[e.kind] += 1
    repairs = repair_hierarchy_cycles(lg)
    summary = LabelSummary(
        identity=counts[EdgeKind.IDENTITY],
        hierarchy=counts[EdgeKind.HIERARCHY],
        noise=counts[EdgeKind.NOISE],
        total=len(lg.edges),
        cycle_repairs=repairs,
    )
    if summary.identity + summary.hierarchy + summary.noise != summary.total:
        raise InvariantError("label counts do not sum to edge count")
    return summary


# ---------------------------------------------------------------------------
# Persistence: labels "<u> <v> <LABEL> [parent]", nodes "<id>\t<phrase>\t<name>\t<origin>"
# ---------------------------------------------------------------------------

def save_labels(path: Path, lg: LabeledGraph) -> None:
    with Path(path).open("w", encoding="utf-8") as out:
        for e in sorted(lg.edges, key=lambda e: (e.u, e.v)):
            if e.kind is EdgeKind.HIERARCHY:
                out.write(f"{e.u} {e.v} {e.weight} {e.kind.value} {e.parent}\n")
            else:
                out.write(f"{e.u} {e.v} {e.weight} {e.kind.value}\n")


def save_nodes(path: Path, lg: LabeledGraph) -> None:
    with Path(path).open("w", encoding="utf-8") as out:
        for i, phrase in enumerate(lg.phrases):
            name_flag = 1 if lg.is_name[i] else 0
            out.write(f"{i}\t{phrase}\t{name_flag}\t{lg.origins[i]}\n")


def load_labeled_graph(nodes_path: Path, labels_path: Path) -> LabeledGraph:
    try:
        node_lines = Path(nodes_path).read_text(encoding="utf-8").splitlines()
        label_lines = Path(labels_path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read labeled graph: {exc}") from exc
    phrases: list[str] = []
    is_name: list[bool] = []
    origins: list[int] = []
    for lineno, line in enumerate(node_lines, 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise DataError(f"{nodes_path}:{lineno}: expected 4 fields")
        ident, phrase, name_flag, origin = parts
        if int(ident) != len(phrases):
            raise DataError(f"{nodes_path}:{lineno}: node ids not dense/ordered")
        phrases.append(phrase)
        is_name.append(name_flag == "1")
        origins.append(int(origin))
    edges: list[LabeledEdge] = []
    for lineno, line in enumerate(label_lines, 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) not in (4, 5):
            raise DataError(f"{labels_path}:{lineno}: expected 4 or 5 fields")
        u, v, w = int(parts[0]), int(parts[1]), int(parts[2])
        kind = EdgeKind(parts[3])
        parent = int(parts[4]) if len(parts) == 5 else None
        if kind is EdgeKind.HIERARCHY and parent is None:
            raise DataError(f"{labels_path}:{lineno}: hierarchy edge needs a parent")
        edges.append(LabeledEdge(u, v, w, kind, parent=parent))
    return LabeledGraph(phrases=phrases, is_name=is_name, edges=edges, origins=origins)
