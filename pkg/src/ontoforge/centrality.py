"""Betweenness centrality, exact and pivot-approximated.

BC(v) sums, over unordered node pairs {s, t} with s != v != t, the
fraction of shortest s-t paths that pass through v. Shortest paths are
hop counts on the unweighted graph: edge weights encode evidence
strength, not distance. The pivot approximation runs one dependency
accumulation per sampled pivot and scales by node_count / k, which is
unbiased and reproduces the exact scores when k equals the node count.

Each per-source sweep is a level-synchronous BFS expressed as sparse
matrix-vector products, so large sweeps stay in compiled code. Sources
are processed in fixed-size chunks whose partial sums are reduced in
chunk order, making the result bit-identical for any worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .errors import DataError
from .graph import CorefGraph

log = logging.getLogger(__name__)

_CHUNK = 64  # sources per reduction chunk; fixed so worker count cannot matter


@dataclass
class PivotConfig:
    """Number of pivots and the seed that selects them."""

    k: int
    seed: int = 0

    def validate(self, node_count: int) -> None:
        if self.k < 1:
            raise DataError(f"pivot count must be >= 1, got {self.k}")
        if self.k > node_count:
            raise DataError(
                f"pivot count {self.k} exceeds node count {node_count}"
            )
        if node_count > 1 and self.k <= math.log2(node_count):
            log.warning(
                "pivot count %d <= log2(%d) = %.1f; estimates may be unstable",
                self.k,
                node_count,
                math.log2(node_count),
            )


def _source_dependencies(adjacency: sparse.csr_matrix, source: int) -> np.ndarray:
    """Brandes dependency vector delta_s for one source."""
    n = adjacency.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n, dtype=np.float64)
    dist[source] = 0
    sigma[source] = 1.0
    level = 0
    while True:
        frontier_sigma = np.where(dist == level, sigma, 0.0)
        pushed = adjacency @ frontier_sigma
        newly = (dist < 0) & (pushed > 0.0)
        if not newly.any():
            break
        dist[newly] = level + 1
        sigma[newly] = pushed[newly]
        level += 1
    delta = np.zeros(n, dtype=np.float64)
    for lev in range(level, 0, -1):
        at_level = dist == lev
        coef = np.zeros(n, dtype=np.float64)
        coef[at_level] = (1.0 + delta[at_level]) / sigma[at_level]
        pulled = adjacency @ coef
        prev = dist == lev - 1
        delta[prev] += sigma[prev] * pulled[prev]
    delta[source] = 0.0
    return delta


def _accumulate(
    adjacency: sparse.csr_matrix, sources: Sequence[int], workers: int
) -> np.ndarray:
    """Sum of per-source dependency vectors, reduced in fixed chunk order."""
    n = adjacency.shape[0]
    chunks = [sources[i : i + _CHUNK] for i in range(0, len(sources), _CHUNK)]

    def chunk_sum(chunk: Sequence[int]) -> np.ndarray:
        acc = np.zeros(n, dtype=np.float64)
        for s in chunk:
            acc += _source_dependencies(adjacency, s)
        return acc

    total = np.zeros(n, dtype=np.float64)
    if workers <= 1 or len(chunks) <= 1:
        for chunk in chunks:
            total += chunk_sum(chunk)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for partial in pool.map(chunk_sum, chunks):
                total += partial
    return total


def exact_betweenness(g: CorefGraph, workers: int = 1) -> np.ndarray:
    """Exact betweenness over unordered pairs, one float per node id."""
    n = g.node_count
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    total = _accumulate(g.adjacency(), range(n), workers)
    return total / 2.0


def approx_betweenness(
    g: CorefGraph, cfg: PivotConfig, workers: int = 1
) -> np.ndarray:
    """Pivot-sampled betweenness estimate, scaled by node_count / k."""
    n = g.node_count
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    cfg.validate(n)
    rng = np.random.default_rng(cfg.seed)
    pivots = np.sort(rng.choice(n, size=cfg.k, replace=False))
    total = _accumulate(g.adjacency(), pivots.tolist(), workers)
    return total * (n / cfg.k) / 2.0


class OrderKind:
    DIRECTED = "directed"
    TIE_NONZERO = "tie_nonzero"
    BOTH_ZERO = "both_zero"


@dataclass(frozen=True)
class EdgeOrder:
    u: int
    v: int
    kind: str
    hi: Optional[int] = None  # higher-centrality endpoint when directed
    lo: Optional[int] = None


def order_edges(g: CorefGraph, scores: np.ndarray) -> list[EdgeOrder]:
    """Classify every edge by the relative centrality of its endpoints."""
    if len(scores) != g.node_count:
        raise DataError("scores do not cover all nodes")
    out: list[EdgeOrder] = []
    for u, v, _ in g.edges():
        su, sv = float(scores[u]), float(scores[v])
        if su == 0.0 and sv == 0.0:
            out.append(EdgeOrder(u, v, OrderKind.BOTH_ZERO))
        elif su == sv:
            out.append(EdgeOrder(u, v, OrderKind.TIE_NONZERO))
        elif su > sv:
            out.append(EdgeOrder(u, v, OrderKind.DIRECTED, hi=u, lo=v))
        else:
            out.append(EdgeOrder(u, v, OrderKind.DIRECTED, hi=v, lo=u))
    return out


# ---------------------------------------------------------------------------
# Scores file: "<node_id> <score>" per line.
# ---------------------------------------------------------------------------

def save_scores(path: Path, scores: np.ndarray) -> None:
    with Path(path).open("w", encoding="utf-8") as out:
        for i, score in enumerate(scores):
            out.write(f"{i} {float(score)!r}\n")


def load_scores(path: Path, node_count: int) -> np.ndarray:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read scores file {path}: {exc}") from exc
    scores = np.zeros(node_count, dtype=np.float64)
    filled = np.zeros(node_count, dtype=bool)
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            ident, value = line.split()
            scores[int(ident)] = float(value)
            filled[int(ident)] = True
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}:{lineno}: malformed score line") from exc
    if not filled.all():
        raise DataError(f"{path}: scores missing for {int((~filled).sum())} nodes")
    return scores
