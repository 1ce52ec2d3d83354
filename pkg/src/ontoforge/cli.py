"""Command-line entry point.

Subcommands mirror the pipeline stages (ingest, graph, centrality,
classify, senses, noise, build, export, evaluate), plus gen-planted for
synthetic corpora and run for the whole pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import PipelineConfig
from .errors import DataError, InvariantError
from .planted import PlantedOntologySpec, generate_planted

log = logging.getLogger("ontoforge")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value config file")
    parser.add_argument("--out", type=Path, dest="outdir", help="output directory")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--workers", type=int, help="worker threads")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg.update_from_file(args.config)
    overrides = {
        "outdir": getattr(args, "outdir", None),
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
        "chains": getattr(args, "chains", None),
        "stoplists": getattr(args, "stoplists", None),
        "embeddings": getattr(args, "embeddings", None),
        "reference_hierarchy": getattr(args, "ref_hierarchy", None),
        "reference_aliases": getattr(args, "ref_aliases", None),
        "pivots": getattr(args, "pivots", None),
        "knn": getattr(args, "knn", None),
        "name_threshold": getattr(args, "name_threshold", None),
        "pmi_threshold": getattr(args, "pmi_threshold", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "exact", False):
        cfg.exact = True
    if getattr(args, "no_figures", False):
        cfg.figures = False
    if getattr(args, "reduce", False):
        cfg.reduce = True
    cfg.validate()
    return cfg


def build_parser() -> _Parser:
    parser = _Parser(prog="ontoforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a chains file")
    p.add_argument("--chains", type=Path, help="chains JSONL file")
    p.add_argument("--stoplists", type=Path, help="directory with stop-list files")
    _add_config_options(p)

    p = sub.add_parser("graph", help="build the co-occurrence graph")
    _add_config_options(p)

    p = sub.add_parser("centrality", help="compute betweenness scores")
    p.add_argument("--pivots", type=int, help="pivot count for approximation")
    p.add_argument("--exact", action="store_true", help="force exact computation")
    _add_config_options(p)

    p = sub.add_parser("classify", help="label edges identity/hierarchy")
    p.add_argument("--name-threshold", type=float, dest="name_threshold")
    _add_config_options(p)

    p = sub.add_parser("senses", help="split/merge ambiguous names")
    p.add_argument("--embeddings", type=Path, help="embeddings file")
    p.add_argument("--knn", type=int, help="nearest-neighbor count")
    _add_config_options(p)

    p = sub.add_parser("noise", help="PMI-filter noisy edges and finalize labels")
    p.add_argument("--pmi-threshold", type=float, dest="pmi_threshold")
    _add_config_options(p)

    p = sub.add_parser("build", help="collapse identities and lift the hierarchy")
    p.add_argument("--reduce", action="store_true", help="transitive reduction")
    _add_config_options(p)

    p = sub.add_parser("export", help="export the ontology")
    p.add_argument("--format", choices=("json", "edge_tsv"), default="edge_tsv")
    p.add_argument("--to", type=Path, help="output file")
    p.add_argument("--reduce", action="store_true", help="transitive reduction")
    _add_config_options(p)

    p = sub.add_parser("evaluate", help="score against a reference ontology")
    p.add_argument("--ref-hierarchy", type=Path, dest="ref_hierarchy")
    p.add_argument("--ref-aliases", type=Path, dest="ref_aliases")
    p.add_argument("--stoplists", type=Path)
    _add_config_options(p)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--chains", type=Path)
    p.add_argument("--stoplists", type=Path)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--ref-hierarchy", type=Path, dest="ref_hierarchy")
    p.add_argument("--ref-aliases", type=Path, dest="ref_aliases")
    p.add_argument("--pivots", type=int)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--knn", type=int)
    p.add_argument("--name-threshold", type=float, dest="name_threshold")
    p.add_argument("--pmi-threshold", type=float, dest="pmi_threshold")
    _add_config_options(p)

    p = sub.add_parser("gen-planted", help="generate a synthetic planted corpus")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--branching", type=int, default=4)
    p.add_argument("--aliases", type=int, default=3)
    p.add_argument("--chains-per-doc", type=int, default=5, dest="chains_per_doc")
    p.add_argument("--docs", type=int, default=2000)
    p.add_argument("--ambiguity", type=float, default=0.05)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, dest="outdir")

    return parser


def _dispatch(args: argparse.Namespace) -> dict:
    from . import pipeline

    if args.command == "gen-planted":
        spec = PlantedOntologySpec(
            depth=args.depth,
            branching=args.branching,
            aliases_per_concept=args.aliases,
            chains_per_document=args.chains_per_doc,
            documents=args.docs,
            ambiguity_rate=args.ambiguity,
            noise_rate=args.noise,
        )
        result = generate_planted(spec, seed=args.seed, outdir=args.outdir)
        return result.to_dict()

    cfg = _build_config(args)
    if args.command == "ingest":
        return pipeline.stage_ingest(cfg)
    if args.command == "graph":
        return pipeline.stage_graph(cfg)
    if args.command == "centrality":
        return pipeline.stage_centrality(cfg)
    if args.command == "classify":
        return pipeline.stage_classify(cfg)
    if args.command == "senses":
        return pipeline.stage_senses(cfg)
    if args.command == "noise":
        return pipeline.stage_noise(cfg)
    if args.command == "build":
        return pipeline.stage_build(cfg)
    if args.command == "export":
        return pipeline.stage_export(cfg, format=args.format, out=args.to)
    if args.command == "evaluate":
        return pipeline.stage_evaluate(cfg)
    if args.command == "run":
        return pipeline.run_pipeline(cfg)
    raise InvariantError(f"unhandled command {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        result = _dispatch(args)
    except DataError as exc:
        log.error("%s", exc)
        return 2
    except InvariantError as exc:
        log.error("invariant violation: %s", exc)
        return 3
    json.dump(result, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
