"""Command-line front end: one subcommand per pipeline stage.

Settings come from an optional JSON config (``--config``); command-line flags
override it. Every output lands in ``output_dir``. Failures print a single
``biokg: error: <command>: <message>`` line to stderr and exit with status 1.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
import zlib
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .embed import EmbeddingTable, TrainParams, train
from .export import EXTENSIONS, FORMATS, ExportSpec, export_graph
from .graph import (
    EgoGraph,
    build_cooc_graph,
    ego_by_frequency,
    ego_by_similarity,
    read_graph_csv,
    write_edges_csv,
    write_ego_csv,
    write_nodes_csv,
)
from .normalize import Normalizer, normalize_entity
from .pipeline import iter_document_keys
from .tagging import extract_surfaces, read_conll
from .typeclass import (
    EntityCategory,
    Forest,
    ForestParams,
    evaluate,
    read_labeled_csv,
    train_forest,
    train_test_split,
    write_metrics_csv,
)

logger = logging.getLogger("biokg")

COMMANDS = (
    "rank-authors", "decode", "normalize", "classify-train", "classify",
    "cooc-build", "ego", "embed-train", "sim-ego", "export",
)
# which configured paths each command reads
REQUIRED_INPUTS = {
    "rank-authors": ("corpus_path",),
    "decode": ("annotations_path",),
    "classify-train": ("labeled_types_path",),
    "cooc-build": ("corpus_path",),
    "embed-train": ("corpus_path",),
}
PATH_FIELDS = ("corpus_path", "annotations_path", "alias_table_path", "labeled_types_path", "model_path", "output_dir")


class CLIError(Exception):
    pass


@dataclass
class PipelineConfig:
    corpus_path: Path | None = None
    annotations_path: Path | None = None
    alias_table_path: Path | None = None
    labeled_types_path: Path | None = None
    model_path: Path | None = None
    output_dir: Path = Path("out")
    seed: int = 42
    workers: int = 1
    test_fraction: float = 0.2
    train: dict = field(default_factory=dict)
    forest: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: Path) -> "PipelineConfig":
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CLIError(f"config {path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise CLIError(f"config {path}: unknown keys {unknown}")
        base = path.parent
        for name in PATH_FIELDS:
            if raw.get(name) is not None:
                p = Path(raw[name])
                raw[name] = p if p.is_absolute() else base / p
        return cls(**raw)

    def validate(self, command: str) -> None:
        for name in REQUIRED_INPUTS.get(command, ()):
            value = getattr(self, name)
            if value is None:
                raise CLIError(f"{name} is not set (config or flag)")
            if not Path(value).is_file():
                raise CLIError(f"{name} does not exist: {value}")
        for name in ("alias_table_path", "model_path"):
            value = getattr(self, name)
            if value is not None and not Path(value).is_file():
                raise CLIError(f"{name} does not exist: {value}")
        try:
            ForestParams(**self.forest)
            TrainParams(**self.train).validate()
        except TypeError as exc:
            raise CLIError(f"bad parameter block: {exc}") from None

    def stage_seed(self, stage: str) -> int:
        """Per-stage seed derived from the single config seed."""
        seq = np.random.SeedSequence([self.seed, zlib.crc32(stage.encode())])
        return int(seq.generate_state(1)[0])

    def train_params(self) -> TrainParams:
        params = {"seed": self.stage_seed("embed-train"), "workers": self.workers, **self.train}
        return TrainParams(**params)

    def forest_params(self) -> ForestParams:
        return ForestParams(**{"seed": self.stage_seed("classify-train"), **self.forest})

    def out(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name


def _safe_name(key: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", key) or "_"


def _write_rows(path: Path, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _read_lines(path: Path) -> list[str]:
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _category(raw: str | None) -> EntityCategory | None:
    return EntityCategory.parse(raw) if raw else None


def _normalizer(cfg: PipelineConfig) -> Normalizer:
    return Normalizer.from_file(cfg.alias_table_path)


# ---------------------------------------------------------------------------
# commands


def cmd_rank_authors(cfg, args) -> list[Path]:
    ranks = corpus_mod.rank_authors(corpus_mod.load_corpus(cfg.corpus_path))
    path = cfg.out("authors.csv")
    _write_rows(path, ([r.author, r.article_count, r.rank] for r in ranks))
    return [path]


def _decoded_spans(cfg, args):
    source = cfg.annotations_path
    doc_id = args.doc_id or source.stem
    return extract_surfaces(read_conll(source), doc_id)


def cmd_decode(cfg, args) -> list[Path]:
    spans = _decoded_spans(cfg, args)
    path = cfg.out("entities.csv")
    _write_rows(path, ([s.doc_id, s.token_start, s.token_end, s.surface] for s in spans))
    return [path]


def cmd_normalize(cfg, args) -> list[Path]:
    if args.input:
        surfaces = _read_lines(Path(args.input))
    elif cfg.annotations_path:
        surfaces = [s.surface for s in extract_surfaces(read_conll(cfg.annotations_path))]
    else:
        raise CLIError("normalize needs --input or annotations_path")
    norm = _normalizer(cfg)
    seen = dict.fromkeys(surfaces)
    path = cfg.out("normalized.csv")
    _write_rows(path, ([s, norm(s)] for s in seen))
    return [path]


def cmd_classify_train(cfg, args) -> list[Path]:
    labeled = read_labeled_csv(cfg.labeled_types_path)
    labeled = [(normalize_entity(k), c) for k, c in labeled]
    fraction = args.test_fraction if args.test_fraction is not None else cfg.test_fraction
    train_set, test_set = train_test_split(labeled, fraction, seed=cfg.stage_seed("split"))
    forest = train_forest(train_set, cfg.forest_params())
    model_path = cfg.out("forest.json")
    forest.save(model_path)
    metrics_path = cfg.out("metrics.csv")
    if test_set:
        pred = forest.predict_keys([k for k, _ in test_set])
        write_metrics_csv(evaluate(pred, [c for _, c in test_set]), metrics_path)
    return [model_path, metrics_path]


def _load_forest(cfg, args) -> Forest:
    path = Path(args.model) if getattr(args, "model", None) else (cfg.model_path or cfg.output_dir / "forest.json")
    if not path.is_file():
        raise CLIError(f"no trained model at {path}; run classify-train first")
    return Forest.load(path)


def cmd_classify(cfg, args) -> list[Path]:
    forest = _load_forest(cfg, args)
    if args.input:
        keys = list(dict.fromkeys(normalize_entity(s) for s in _read_lines(Path(args.input))))
    else:
        nodes = cfg.output_dir / "nodes.csv"
        if not nodes.is_file():
            raise CLIError("classify needs --input or an existing nodes.csv")
        keys = sorted(read_graph_csv(nodes, cfg.output_dir / "edges.csv").nodes)
    cats = forest.predict_keys(keys)
    path = cfg.out("classes.csv")
    _write_rows(path, ([k, c.value] for k, c in zip(keys, cats)))
    return [path]


def cmd_cooc_build(cfg, args) -> list[Path]:
    docs = corpus_mod.load_corpus(cfg.corpus_path)
    g = build_cooc_graph(iter_document_keys(docs, _normalizer(cfg)), mention_level=args.mention_level)
    if args.model or cfg.model_path:
        forest = _load_forest(cfg, args)
        keys = sorted(g.nodes)
        g.set_categories(dict(zip(keys, forest.predict_keys(keys))))
    nodes_path, edges_path = cfg.out("nodes.csv"), cfg.out("edges.csv")
    write_nodes_csv(g, nodes_path)
    write_edges_csv(g, edges_path)
    logger.info("co-occurrence graph: %d nodes, %d edges", len(g.nodes), len(g.edges))
    return [nodes_path, edges_path]


def _load_graph(cfg):
    nodes, edges = cfg.output_dir / "nodes.csv", cfg.output_dir / "edges.csv"
    if not edges.is_file():
        raise CLIError(f"no graph at {edges}; run cooc-build first")
    return read_graph_csv(nodes if nodes.is_file() else None, edges)


def _frequency_ego(cfg, args) -> EgoGraph:
    g = _load_graph(cfg)
    return ego_by_frequency(g, normalize_entity(args.source), _category(args.filter_category), args.k)


def _similarity_ego(cfg, args) -> EgoGraph:
    path = cfg.output_dir / "embeddings.txt"
    if not path.is_file():
        raise CLIError(f"no embeddings at {path}; run embed-train first")
    emb = EmbeddingTable.load_text(path)
    candidates = None
    cat = _category(args.filter_category)
    if cat is not None:
        g = _load_graph(cfg)
        candidates = [k for k in emb.keys if k in g.nodes and g.nodes[k].category == cat]
    return ego_by_similarity(emb, normalize_entity(args.source), candidates, args.k)


def _emit_ego(cfg, ego: EgoGraph, prefix: str) -> list[Path]:
    path = cfg.out(f"{prefix}_{_safe_name(ego.source)}.csv")
    write_ego_csv(ego, path)
    sys.stdout.write(path.read_text(encoding="utf-8"))
    return [path]


def cmd_ego(cfg, args) -> list[Path]:
    return _emit_ego(cfg, _frequency_ego(cfg, args), "ego")


def cmd_sim_ego(cfg, args) -> list[Path]:
    return _emit_ego(cfg, _similarity_ego(cfg, args), "sim_ego")


def cmd_embed_train(cfg, args) -> list[Path]:
    docs = corpus_mod.load_corpus(cfg.corpus_path)
    sequences = [keys for _, keys in iter_document_keys(docs, _normalizer(cfg))]
    table = train(sequences, cfg.train_params())
    emb_path, loss_path = cfg.out("embeddings.txt"), cfg.out("embed_loss.csv")
    table.save_text(emb_path)
    _write_rows(loss_path, ([i, f"{loss:.9g}"] for i, loss in enumerate(table.epoch_losses, start=1)))
    return [emb_path, loss_path]


def cmd_export(cfg, args) -> list[Path]:
    spec = ExportSpec(args.format, not args.no_categories, args.min_weight)
    ext = EXTENSIONS[args.format]
    if args.source:
        ego = _similarity_ego(cfg, args) if args.kind == "cosine" else _frequency_ego(cfg, args)
        nodes = cfg.output_dir / "nodes.csv"
        cats = {}
        if nodes.is_file():
            g = read_graph_csv(nodes, cfg.output_dir / "edges.csv")
            cats = {k: info.category for k, info in g.nodes.items()}
        graph = ego.to_graph(cats)
        path = cfg.out(f"ego_{args.kind}_{_safe_name(ego.source)}{ext}")
    else:
        graph = _load_graph(cfg)
        path = cfg.out(f"graph{ext}")
    n = export_graph(graph, spec, path)
    logger.info("wrote %d bytes to %s", n, path)
    return [path]


HANDLERS = {
    "rank-authors": cmd_rank_authors,
    "decode": cmd_decode,
    "normalize": cmd_normalize,
    "classify-train": cmd_classify_train,
    "classify": cmd_classify,
    "cooc-build": cmd_cooc_build,
    "ego": cmd_ego,
    "embed-train": cmd_embed_train,
    "sim-ego": cmd_sim_ego,
    "export": cmd_export,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON pipeline config")
    common.add_argument("--corpus", dest="corpus_path", type=Path)
    common.add_argument("--annotations", dest="annotations_path", type=Path)
    common.add_argument("--aliases", dest="alias_table_path", type=Path)
    common.add_argument("--labeled-types", dest="labeled_types_path", type=Path)
    common.add_argument("--output-dir", dest="output_dir", type=Path)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="biokg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    sub.add_parser("rank-authors", parents=[common], help="rank authors by article count")

    p = sub.add_parser("decode", parents=[common], help="decode CoNLL BIO labels into entities")
    p.add_argument("--input", help="CoNLL TSV (default: annotations_path)")
    p.add_argument("--doc-id", help="doc id for the spans (default: file stem)")

    p = sub.add_parser("normalize", parents=[common], help="normalize entity surfaces")
    p.add_argument("--input", help="file with one surface per line")

    p = sub.add_parser("classify-train", parents=[common], help="train the entity-type forest")
    p.add_argument("--test-fraction", type=float)

    p = sub.add_parser("classify", parents=[common], help="predict entity types")
    p.add_argument("--input", help="file with one entity per line (default: graph nodes)")
    p.add_argument("--model", help="forest JSON (default: output_dir/forest.json)")

    p = sub.add_parser("cooc-build", parents=[common], help="build the co-occurrence graph")
    p.add_argument("--mention-level", action="store_true", help="weight by mention pairs, not documents")
    p.add_argument("--model", help="forest JSON used to type the nodes")

    sub.add_parser("embed-train", parents=[common], help="train entity embeddings")

    for name, helptext in (("ego", "co-occurrence ego graph"), ("sim-ego", "cosine-similarity ego graph")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--source", required=True)
        p.add_argument("--k", type=int, default=10)
        p.add_argument("--filter-category", choices=[c.value for c in EntityCategory])

    p = sub.add_parser("export", parents=[common], help="export the graph or an ego graph")
    p.add_argument("--format", choices=FORMATS, default="gexf")
    p.add_argument("--min-weight", type=float, default=0.0)
    p.add_argument("--no-categories", action="store_true")
    p.add_argument("--source", help="export this key's ego graph instead of the full graph")
    p.add_argument("--kind", choices=("cooccurrence", "cosine"), default="cooccurrence")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--filter-category", choices=[c.value for c in EntityCategory])
    return parser


def _resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    for name in ("corpus_path", "annotations_path", "alias_table_path", "labeled_types_path",
                 "output_dir", "seed", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "model", None):
        cfg.model_path = Path(args.model)
    if args.command == "decode" and args.input:
        cfg.annotations_path = Path(args.input)
    return cfg


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 with usage on bad commands
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _resolve_config(args)
        cfg.validate(args.command)
        outputs = HANDLERS[args.command](cfg, args)
    except (CLIError, ValueError, KeyError, OSError) as exc:
        message = " ".join(str(exc).split()) or type(exc).__name__
        print(f"biokg: error: {args.command}: {message}", file=sys.stderr)
        return 1
    for path in outputs:
        logger.info("wrote %s", path)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
