"""Score a produced ontology against a reference ontology.

Reference inputs (string level, normalized the same way as chain
ingestion so the shared vocabulary is computed on like-for-like forms):
  - hierarchy: TSV, one ``child<TAB>parent`` edge per line;
  - aliases:   one group per line, tab-separated equivalent strings.

Metrics: hierarchy precision (a predicted parent->child string edge is
correct when the reference has a directed path parent => child), recall
(fraction of reference direct edges between shared strings that appear
among the predictions), direction consistency (agreement of edge
orientation for pairs connected in the reference), and alias clustering
entropy / adjusted Rand index over the shared strings.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import DataError
from .ingest import StopLists, normalize_phrase
from .ontology import Ontology

log = logging.getLogger(__name__)


class ReferenceOntology:
    """String-level reference hierarchy plus alias groups."""

    def __init__(
        self,
        hierarchy_edges: set[tuple[str, str]],  # (child, parent)
        alias_groups: list[set[str]],
    ):
        self.hierarchy_edges = set(hierarchy_edges)
        self.alias_groups = [set(group) for group in alias_groups]
        self.strings: set[str] = set()
        for child, parent in self.hierarchy_edges:
            self.strings.add(child)
            self.strings.add(parent)
        for group in self.alias_groups:
            self.strings.update(group)
        self._index = {s: i for i, s in enumerate(sorted(self.strings))}
        self._descendants = self._build_reachability()

    def _build_reachability(self) -> list[int]:
        """Descendant bitsets per string, computed in reverse topological
        order; raises DataError if the hierarchy is not a DAG."""
        n = len(self._index)
        children: list[list[int]] = [[] for _ in range(n)]
        indegree = [0] * n
        for child, parent in self.hierarchy_edges:
            children[self._index[parent]].append(self._index[child])
            indegree[self._index[child]] += 1
        ready = [i for i in range(n) if indegree[i] == 0]
        order: list[int] = []
        while ready:
            node = ready.pop()
            order.append(node)
            for nxt in children[node]:
                indegree[nxt] -= 1
                if indegree[nxt] == 0:
                    ready.append(nxt)
        if len(order) != n:
            raise DataError("reference hierarchy contains a cycle")
        descendants = [0] * n
        for node in reversed(order):
            bits = 0
            for child in children[node]:
                bits |= descendants[child] | (1 << child)
            descendants[node] = bits
        return descendants

    def reachable(self, ancestor: str, descendant: str) -> bool:
        """True when a directed path ancestor => descendant exists."""
        ia = self._index.get(ancestor)
        ib = self._index.get(descendant)
        if ia is None or ib is None:
            return False
        return bool(self._descendants[ia] >> ib & 1)

    def reachable_dfs(self, ancestor: str, descendant: str) -> bool:
        """Per-query DFS used as an independent check of the bitset index."""
        if ancestor not in self._index or descendant not in self._index:
            return False
        children: dict[str, list[str]] = {}
        for child, parent in self.hierarchy_edges:
            children.setdefault(parent, []).append(child)
        stack = list(children.get(ancestor, []))
        seen = set(stack)
        while stack:
            node = stack.pop()
            if node == descendant:
                return True
            for nxt in children.get(node, []):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False


def _normalize_or_keep(raw: str, lists: Optional[StopLists]) -> Optional[str]:
    if lists is None:
        return raw.strip().lower() or None
    return normalize_phrase(raw, lists)


def load_reference_hierarchy(
    path: Path, lists: Optional[StopLists] = None
) -> set[tuple[str, str]]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read reference hierarchy {path}: {exc}") from exc
    edges: set[tuple[str, str]] = set()
    dropped = 0
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected child<TAB>parent")
        child = _normalize_or_keep(parts[0], lists)
        parent = _normalize_or_keep(parts[1], lists)
        if child is None or parent is None or child == parent:
            dropped += 1
            continue
        edges.add((child, parent))
    if dropped:
        log.info("reference hierarchy: %d rows dropped by normalization", dropped)
    return edges


def load_reference_aliases(
    path: Path, lists: Optional[StopLists] = None
) -> list[set[str]]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read reference aliases {path}: {exc}") from exc
    groups: list[set[str]] = []
    for line in lines:
        if not line.strip() or line.startswith("#"):
            continue
        group = set()
        for raw in line.split("\t"):
            canon = _normalize_or_keep(raw, lists)
            if canon is not None:
                group.add(canon)
        if group:
            groups.append(group)
    return groups


def shared_vocabulary(ours: Ontology, ref: ReferenceOntology) -> set[str]:
    return ours.all_aliases() & ref.strings


def predicted_string_edges(
    ours: Ontology, shared: set[str]
) -> set[tuple[str, str]]:
    """Expand concept-level edges to (parent_string, child_string) pairs
    restricted to the shared vocabulary."""
    by_id = {c.concept_id: c for c in ours.concepts}
    out: set[tuple[str, str]] = set()
    for parent_cid, child_cid in ours.edges:
        parents = [a for a in by_id[parent_cid].aliases if a in shared]
        children = [a for a in by_id[child_cid].aliases if a in shared]
        for pa in parents:
            for ca in children:
                if pa != ca:
                    out.add((pa, ca))
    return out


@dataclass
class HierarchyScore:
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    predicted: int
    correct: int
    reference_edges: int
    matched_reference_edges: int


def hierarchy_pr(
    ours: Ontology, ref: ReferenceOntology, shared: set[str]
) -> HierarchyScore:
    predicted = predicted_string_edges(ours, shared)
    correct = sum(1 for parent, child in predicted if ref.reachable(parent, child))
    ref_direct = {
        (child, parent)
        for child, parent in ref.hierarchy_edges
        if child in shared and parent in shared
    }
    matched = sum(
        1 for child, parent in ref_direct if (parent, child) in predicted
    )
    precision = correct / len(predicted) if predicted else None
    recall = matched / len(ref_direct) if ref_direct else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return HierarchyScore(
        precision=precision,
        recall=recall,
        f1=f1,
        predicted=len(predicted),
        correct=correct,
        reference_edges=len(ref_direct),
        matched_reference_edges=matched,
    )


def direction_consistency(
    ours: Ontology, ref: ReferenceOntology, shared: set[str]
) -> tuple[Optional[float], int]:
    """Fraction of predicted edges, among those whose endpoints are
    connected in the reference, that point the same way."""
    predicted = predicted_string_edges(ours, shared)
    eligible = 0
    consistent = 0
    for parent, child in predicted:
        forward = ref.reachable(parent, child)
        backward = ref.reachable(child, parent)
        if not forward and not backward:
            continue
        eligible += 1
        if forward:
            consistent += 1
    if eligible == 0:
        return None, 0
    return consistent / eligible, eligible


def _clusters_over_shared(
    groups: list[set[str]], shared: set[str]
) -> tuple[dict[str, int], set[str]]:
    """Map string -> cluster index, restricted to shared strings.

    Strings appearing in more than one group are ambiguous (a split
    name); they are excluded, and returned separately.
    """
    membership: dict[str, int] = {}
    ambiguous: set[str] = set()
    for idx, group in enumerate(groups):
        for s in group:
            if s not in shared:
                continue
            if s in membership:
                ambiguous.add(s)
            else:
                membership[s] = idx
    for s in ambiguous:
        membership.pop(s, None)
    return membership, ambiguous


def cluster_entropy(
    predicted: dict[str, int], gold: dict[str, int]
) -> float:
    """Size-weighted mean Shannon entropy (natural log) of the gold-label
    composition of each predicted cluster."""
    clusters: dict[int, list[str]] = {}
    for s, c in predicted.items():
        clusters.setdefault(c, []).append(s)
    total = sum(len(members) for members in clusters.values())
    if total == 0:
        return 0.0
    weighted = 0.0
    for members in clusters.values():
        counts: dict[int, int] = {}
        for s in members:
            counts[gold[s]] = counts.get(gold[s], 0) + 1
        h = 0.0
        for count in counts.values():
            p = count / len(members)
            h -= p * math.log(p)
        weighted += (len(members) / total) * h
    return weighted


def adjusted_rand_index(
    predicted: dict[str, int], gold: dict[str, int]
) -> float:
    """ARI from the contingency table between the two partitions."""
    keys = sorted(predicted)
    n = len(keys)
    if n < 2:
        return 1.0
    table: dict[tuple[int, int], int] = {}
    row_sums: dict[int, int] = {}
    col_sums: dict[int, int] = {}
    for s in keys:
        i, j = predicted[s], gold[s]
        table[(i, j)] = table.get((i, j), 0) + 1
        row_sums[i] = row_sums.get(i, 0) + 1
        col_sums[j] = col_sums.get(j, 0) + 1

    def comb2(x: int) -> int:
        return x * (x - 1) // 2

    index = sum(comb2(v) for v in table.values())
    sum_rows = sum(comb2(v) for v in row_sums.values())
    sum_cols = sum(comb2(v) for v in col_sums.values())
    expected = sum_rows * sum_cols / comb2(n)
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


@dataclass
class EvalReport:
    shared_strings: int
    hierarchy: HierarchyScore
    direction: Optional[float]
    direction_eligible: int
    entropy: Optional[float]
    ari: Optional[float]
    clustered_strings: int
    ambiguous_strings_excluded: int

    def to_dict(self) -> dict:
        return {
            "shared_strings": self.shared_strings,
            "hierarchy_precision": self.hierarchy.precision,
            "hierarchy_recall": self.hierarchy.recall,
            "hierarchy_f1": self.hierarchy.f1,
            "predicted_edges": self.hierarchy.predicted,
            "correct_edges": self.hierarchy.correct,
            "reference_edges": self.hierarchy.reference_edges,
            "matched_reference_edges": self.hierarchy.matched_reference_edges,
            "direction_consistency": self.direction,
            "direction_eligible_edges": self.direction_eligible,
            "alias_entropy": self.entropy,
            "alias_ari": self.ari,
            "clustered_strings": self.clustered_strings,
            "ambiguous_strings_excluded": self.ambiguous_strings_excluded,
        }

    def table(self) -> str:
        def fmt(x: Optional[float]) -> str:
            return "absent" if x is None else f"{x:.3f}"

        rows = [
            ("Hierarchy edges", "Precision", fmt(self.hierarchy.precision)),
            ("Hierarchy edges", "Recall", fmt(self.hierarchy.recall)),
            ("Hierarchy edges", "F1", fmt(self.hierarchy.f1)),
            ("Hierarchy directions", "Consistency", fmt(self.direction)),
            ("Identity edges", "Entropy", fmt(self.entropy)),
            ("Identity edges", "ARI", fmt(self.ari)),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"shared vocabulary: {self.shared_strings} strings"]
        for task, measure, value in rows:
            lines.append(f"{task:<{width}}  {measure:<12} {value}")
        return "\n".join(lines)


def alias_clustering_scores(
    ours: Ontology, ref: ReferenceOntology, shared: set[str]
) -> tuple[Optional[float], Optional[float], int, int]:
    """(entropy, ari, clustered strings, excluded ambiguous strings)."""
    our_groups = [set(c.aliases) for c in ours.concepts]
    predicted, amb_ours = _clusters_over_shared(our_groups, shared)
    gold, amb_gold = _clusters_over_shared(ref.alias_groups, shared)
    # Reference strings missing from a gold alias group (hierarchy-only
    # strings) count as singleton gold clusters.
    next_gold = max(gold.values(), default=-1) + 1
    for s in sorted(predicted):
        if s not in gold:
            gold[s] = next_gold
            next_gold += 1
    ambiguous = amb_ours | amb_gold
    keys = sorted((set(predicted) & set(gold)) - ambiguous)
    if len(keys) < 2:
        return None, None, len(keys), len(ambiguous)
    pred = {s: predicted[s] for s in keys}
    gld = {s: gold[s] for s in keys}
    return (
        cluster_entropy(pred, gld),
        adjusted_rand_index(pred, gld),
        len(keys),
        len(ambiguous),
    )


def evaluate(ours: Ontology, ref: ReferenceOntology) -> EvalReport:
    shared = shared_vocabulary(ours, ref)
    if not shared:
        raise DataError("no shared vocabulary between ontology and reference")
    hierarchy = hierarchy_pr(ours, ref, shared)
    direction, eligible = direction_consistency(ours, ref, shared)
    entropy, ari, clustered, excluded = alias_clustering_scores(ours, ref, shared)
    return EvalReport(
        shared_strings=len(shared),
        hierarchy=hierarchy,
        direction=direction,
        direction_eligible=eligible,
        entropy=entropy,
        ari=ari,
        clustered_strings=clustered,
        ambiguous_strings_excluded=excluded,
    )


def save_report(
    report: EvalReport,
    json_path: Path,
    tsv_path: Optional[Path] = None,
    table_path: Optional[Path] = None,
) -> None:
    with Path(json_path).open("w", encoding="utf-8") as out:
        json.dump(report.to_dict(), out, indent=2, sort_keys=True)
        out.write("\n")
    if tsv_path is not None:
        with Path(tsv_path).open("w", encoding="utf-8") as out:
            for key, value in sorted(report.to_dict().items()):
                out.write(f"{key}\t{'' if value is None else value}\n")
    if table_path is not None:
        Path(table_path).write_text(report.table() + "\n", encoding="utf-8")
