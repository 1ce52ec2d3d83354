"""Stage orchestration: each stage reads and writes files under the
output directory so any stage can be rerun on its own, and a full run is
just the stages in order. Identical config + inputs give byte-identical
artifacts; no timestamps are written.

Artifacts (under cfg.outdir):
  normalized_chains.tsv   one chain per line, tab-separated canonical phrases
  phrases.tsv             phrase, raw count, capitalized count
  graph.txt               sealed graph snapshot
  scores.tsv              node_id score
  nodes.classified.tsv / labels.classified.tsv
  nodes.resolved.tsv   / labels.resolved.tsv     (after sense resolution)
  nodes.final.tsv      / labels.final.tsv        (after noise filter + repair)
  ontology.json / ontology.tsv
  report.json / report.tsv
  <stage>_summary.json    counts + full config echo per stage
  figures/*.png           rendered when figures are enabled
"""

from __future__ import annotations

import json
import logging
import shutil
from pathlib import Path
from typing import Optional

from . import centrality as bc
from . import classify as cls
from . import evaluate as ev
from . import plots
from .config import PipelineConfig
from .embeddings import load_embeddings
from .errors import DataError
from .graph import CorefGraph, build_graph, degree_stats
from .ingest import (
    ingest_file,
    load_chains,
    load_phrase_table,
    load_stoplists,
    save_chains,
    save_phrase_table,
)
from .ontology import collapse_identity, export, import_json, lift_hierarchy, transitive_reduction
from .senses import resolve_senses

log = logging.getLogger(__name__)

CHAINS_NORM = "normalized_chains.tsv"
PHRASES = "phrases.tsv"
GRAPH = "graph.txt"
SCORES = "scores.tsv"
NODES_CLASSIFIED = "nodes.classified.tsv"
LABELS_CLASSIFIED = "labels.classified.tsv"
NODES_RESOLVED = "nodes.resolved.tsv"
LABELS_RESOLVED = "labels.resolved.tsv"
NODES_FINAL = "nodes.final.tsv"
LABELS_FINAL = "labels.final.tsv"
ONTOLOGY_JSON = "ontology.json"
ONTOLOGY_TSV = "ontology.tsv"
REPORT_JSON = "report.json"
REPORT_TSV = "report.tsv"
REPORT_TXT = "report.txt"


def _write_summary(cfg: PipelineConfig, name: str, payload: dict) -> None:
    path = Path(cfg.outdir) / f"{name}_summary.json"
    body = {"stage": name, "config": cfg.to_dict(), **payload}
    with path.open("w", encoding="utf-8") as out:
        json.dump(body, out, indent=2, sort_keys=True)
        out.write("\n")


def _require(path: Path, hint: str) -> Path:
    if not Path(path).exists():
        raise DataError(f"missing {path}; run the {hint} stage first")
    return Path(path)


def stage_ingest(cfg: PipelineConfig) -> dict:
    if cfg.chains is None:
        raise DataError("no chains file configured")
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lists = load_stoplists(cfg.stoplists)
    result = ingest_file(cfg.chains, lists)
    save_chains(outdir / CHAINS_NORM, result.chains)
    save_phrase_table(outdir / PHRASES, result.phrases)
    payload = result.summary.to_dict()
    payload["distinct_phrases"] = len(result.phrases)
    _write_summary(cfg, "ingest", payload)
    return payload


def stage_graph(cfg: PipelineConfig) -> dict:
    outdir = Path(cfg.outdir)
    chains = load_chains(_require(outdir / CHAINS_NORM, "ingest"))
    graph = build_graph(chains)
    graph.save(outdir / GRAPH)
    stats = degree_stats(graph)
    if cfg.figures:
        plots.plot_weight_histogram(stats, outdir)
    payload = stats.to_dict()
    _write_summary(cfg, "graph", payload)
    return payload


def stage_centrality(cfg: PipelineConfig) -> dict:
    outdir = Path(cfg.outdir)
    graph = CorefGraph.load(_require(outdir / GRAPH, "graph"))
    if cfg.exact or cfg.pivots >= graph.node_count:
        scores = bc.exact_betweenness(graph, workers=cfg.workers)
        mode = "exact"
    else:
        pivot_cfg = bc.PivotConfig(k=cfg.pivots, seed=cfg.sub_seed("centrality"))
        scores = bc.approx_betweenness(graph, pivot_cfg, workers=cfg.workers)
        mode = f"approx(k={cfg.pivots})"
    bc.save_scores(outdir / SCORES, scores)
    if cfg.figures:
        plots.plot_score_distribution(scores, outdir)
    zero = int((scores == 0.0).sum())
    payload = {
        "mode": mode,
        "nodes": graph.node_count,
        "zero_score_nodes": zero,
        "zero_score_share": zero / graph.node_count if graph.node_count else 0.0,
    }
    _write_summary(cfg, "centrality", payload)
    return payload


def stage_classify(cfg: PipelineConfig) -> dict:
    outdir = Path(cfg.outdir)
    graph = CorefGraph.load(_require(outdir / GRAPH, "graph"))
    scores = bc.load_scores(_require(outdir / SCORES, "centrality"), graph.node_count)
    table = load_phrase_table(_require(outdir / PHRASES, "ingest"))
    names = cls.name_tags(graph.phrases, table, cfg.name_threshold)
    lg = cls.label_identity_zero_bc(graph, scores, names)
    reversals = cls.correct_name_direction(lg)
    cls.save_nodes(outdir / NODES_CLASSIFIED, lg)
    cls.save_labels(outdir / LABELS_CLASSIFIED, lg)
    identity = sum(1 for e in lg.edges if e.kind is cls.EdgeKind.IDENTITY)
    payload = {
        "edges": len(lg.edges),
        "identity": identity,
        "provisional_hierarchy": len(lg.edges) - identity,
        "name_nodes": sum(names),
        "direction_reversals": reversals,
    }
    _write_summary(cfg, "classify", payload)
    return payload


def stage_senses(cfg: PipelineConfig) -> dict:
    outdir = Path(cfg.outdir)
    nodes_in = _require(outdir / NODES_CLASSIFIED, "classify")
    labels_in = _require(outdir / LABELS_CLASSIFIED, "classify")
    if not cfg.senses_enabled or cfg.embeddings is None:
        if cfg.senses_enabled and cfg.embeddings is None:
            log.warning("no embeddings configured; sense resolution skipped")
        shutil.copyfile(nodes_in, outdir / NODES_RESOLVED)
        shutil.copyfile(labels_in, outdir / LABELS_RESOLVED)
        payload = {"skipped": True}
        _write_summary(cfg, "senses", payload)
        return payload
    lg = cls.load_labeled_graph(nodes_in, labels_in)
    table = load_embeddings(cfg.embeddings)
    summary = resolve_senses(
        lg,
        table,
        k_nn=cfg.knn,
        weighted=cfg.knn_weighted,
        seed=cfg.sub_seed("senses"),
    )
    cls.save_nodes(outdir / NODES_RESOLVED, lg)
    cls.save_labels(outdir / LABELS_RESOLVED, lg)
    payload = {"skipped": False, **summary.to_dict()}
    _write_summary(cfg, "senses", payload)
    return payload


def stage_noise(cfg: PipelineConfig) -> dict:
    outdir = Path(cfg.outdir)
    lg = cls.load_labeled_graph(
        _require(outdir / NODES_RESOLVED, "senses"),
        _require(outdir / LABELS_RESOLVED, "senses"),
    )
    filtered = 0
    if cfg.noise_enabled:
        filtered = cls.filter_noise(lg, threshold=cfg.pmi_threshold)
    summary = cls.finalize(lg)
    cls.save_nodes(outdir / NODES_FINAL, lg)
    cls.save_labels(outdir / LABELS_FINAL, lg)
    if cfg.figures:
        plots.plot_label_counts(
            {
                "identity": summary.identity,
                "hierarchy": summary.hierarchy,
                "noise": summary.noise,
            },
            outdir,
        )
    payload = {"pmi_filtered": filtered, **summary.to_dict()}
    _write_summary(cfg, "noise", payload)
    return payload


def stage_build(cfg: PipelineConfig) -> dict:
    outdir = Path(cfg.outdir)
    lg = cls.load_labeled_graph(
        _require(outdir / NODES_FINAL, "noise"),
        _require(outdir / LABELS_FINAL, "noise"),
    )
    concepts, node_to_cid = collapse_identity(lg)
    ontology = lift_hierarchy(lg, concepts, node_to_cid)
    if cfg.reduce:
        ontology = transitive_reduction(ontology)
    export(ontology, outdir / ONTOLOGY_JSON, format="json")
    payload = {
        "concepts": len(ontology.concepts),
        "concept_edges": len(ontology.edges),
        "multi_alias_concepts": sum(1 for c in ontology.concepts if len(c.aliases) > 1),
    }
    _write_summary(cfg, "build", payload)
    return payload


def stage_export(cfg: PipelineConfig, format: str = "edge_tsv", out: Optional[Path] = None) -> dict:
    outdir = Path(cfg.outdir)
    ontology = import_json(_require(outdir / ONTOLOGY_JSON, "build"))
    if cfg.reduce:
        ontology = transitive_reduction(ontology)
    if out is None:
        out = outdir / (ONTOLOGY_TSV if format == "edge_tsv" else ONTOLOGY_JSON)
    export(ontology, out, format=format)
    payload = {"format": format, "path": str(out)}
    _write_summary(cfg, "export", payload)
    return payload


def stage_evaluate(cfg: PipelineConfig) -> dict:
    outdir = Path(cfg.outdir)
    if cfg.reference_hierarchy is None or cfg.reference_aliases is None:
        raise DataError("reference_hierarchy and reference_aliases must be configured")
    ontology = import_json(_require(outdir / ONTOLOGY_JSON, "build"))
    lists = load_stoplists(cfg.stoplists)
    ref = ev.ReferenceOntology(
        hierarchy_edges=ev.load_reference_hierarchy(cfg.reference_hierarchy, lists),
        alias_groups=ev.load_reference_aliases(cfg.reference_aliases, lists),
    )
    report = ev.evaluate(ontology, ref)
    ev.save_report(
        report, outdir / REPORT_JSON, outdir / REPORT_TSV, outdir / REPORT_TXT
    )
    if cfg.figures:
        plots.plot_eval_metrics(
            {
                "precision": report.hierarchy.precision,
                "recall": report.hierarchy.recall,
                "f1": report.hierarchy.f1,
                "direction": report.direction,
                "ari": report.ari,
            },
            outdir,
        )
    payload = report.to_dict()
    _write_summary(cfg, "evaluate", payload)
    return payload


_STAGES = [
    ("ingest", stage_ingest),
    ("graph", stage_graph),
    ("centrality", stage_centrality),
    ("classify", stage_classify),
    ("senses", stage_senses),
    ("noise", stage_noise),
    ("build", stage_build),
]


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage in order; evaluate too when references are set."""
    cfg.validate()
    results = {}
    for name, stage in _STAGES:
        log.info("stage %s", name)
        try:
            results[name] = stage(cfg)
        except Exception:
            log.error("stage %s failed; artifacts are under %s", name, cfg.outdir)
            raise
    stage_export(cfg, format="edge_tsv")
    if cfg.reference_hierarchy is not None and cfg.reference_aliases is not None:
        results["evaluate"] = stage_evaluate(cfg)
    run_path = Path(cfg.outdir) / "run_summary.json"
    with run_path.open("w", encoding="utf-8") as out:
        json.dump(
            {"config": cfg.to_dict(), "stages": results}, out, indent=2, sort_keys=True
        )
        out.write("\n")
    return results
