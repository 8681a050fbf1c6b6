"""Co-occurrence entity graphs and ego-graph extraction.

Edge weights count the documents in which two keys appear together (or, with
``mention_level=True``, the number of mention pairs). Egos rank a source's
neighbors either by that weight or by embedding cosine similarity.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .typeclass import EntityCategory

UNKNOWN = "unknown"
_FLUSH_PAIRS = 4_000_000


class GraphError(KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


@dataclass
class NodeInfo:
    category: EntityCategory | None = None
    doc_freq: int = 0


@dataclass
class EntityRecord:
    key: str
    category: EntityCategory | None = None
    doc_ids: list[str] = field(default_factory=list)
    mention_count: int = 0


def _edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


def format_weight(w) -> str:
    if isinstance(w, (int, np.integer)):
        return str(int(w))
    w = float(w)
    if w.is_integer() and abs(w) < 2**53:
        return str(int(w))
    return repr(w)


def parse_weight(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


class WeightedGraph:
    """Undirected weighted graph keyed by normalized entity strings.

    Edges live in ``edges`` under the key ``(a, b)`` with ``a < b``.
    """

    def __init__(self):
        self.nodes: dict[str, NodeInfo] = {}
        self.edges: dict[tuple[str, str], float] = {}
        self._adj: dict[str, dict[str, float]] | None = None

    def add_node(self, key: str, category: EntityCategory | None = None, doc_freq: int = 0) -> NodeInfo:
        info = self.nodes.get(key)
        if info is None:
            info = self.nodes[key] = NodeInfo(category, doc_freq)
        elif info.category is None:
            info.category = category
        return info

    def add_edge(self, a: str, b: str, weight: float = 1) -> None:
        if a == b:
            raise ValueError(f"self-loop on {a!r}")
        if weight < 0:
            raise ValueError("edge weights must be nonnegative")
        for key in (a, b):
            if key not in self.nodes:
                self.add_node(key)
        if weight == 0:
            return
        k = _edge_key(a, b)
        self.edges[k] = self.edges.get(k, 0) + weight
        self._adj = None

    def weight(self, a: str, b: str) -> float:
        return self.edges.get(_edge_key(a, b), 0)

    def adjacency(self) -> dict[str, dict[str, float]]:
        if self._adj is None:
            adj: dict[str, dict[str, float]] = {k: {} for k in self.nodes}
            for (a, b), w in self.edges.items():
                adj[a][b] = w
                adj[b][a] = w
            self._adj = adj
        return self._adj

    def neighbors(self, key: str) -> dict[str, float]:
        if key not in self.nodes:
            raise GraphError(f"unknown node {key!r}")
        return self.adjacency()[key]

    def set_categories(self, categories: Mapping[str, EntityCategory | None]) -> None:
        for key, cat in categories.items():
            if key in self.nodes:
                self.nodes[key].category = cat

    def validate(self) -> None:
        for (a, b), w in self.edges.items():
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if not a < b:
                raise ValueError(f"edge key {(a, b)!r} not in canonical order")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge {(a, b)!r} has a missing endpoint")
            if w < 0:
                raise ValueError(f"negative weight on {(a, b)!r}")

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WeightedGraph)
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return f"WeightedGraph({len(self.nodes)} nodes, {len(self.edges)} edges)"


@dataclass
class EgoGraph:
    source: str
    neighbors: list[tuple[str, float]]
    weight_kind: str = "cooccurrence"  # or "cosine"

    def to_graph(self, categories: Mapping[str, EntityCategory | None] | None = None) -> WeightedGraph:
        """Star graph around the source; negative cosine weights are dropped."""
        cats = categories or {}
        g = WeightedGraph()
        g.add_node(self.source, cats.get(self.source))
        for key, w in self.neighbors:
            g.add_node(key, cats.get(key))
            if w > 0:
                g.add_edge(self.source, key, w)
        return g


# ---------------------------------------------------------------------------
# building


class _PairAccumulator:
    """Sums weights of integer-coded pairs in bounded-memory batches."""

    def __init__(self):
        self.codes = np.zeros(0, dtype=np.int64)
        self.weights = np.zeros(0, dtype=np.int64)
        self._pending_codes: list[np.ndarray] = []
        self._pending_weights: list[np.ndarray] = []
        self._pending = 0

    def add(self, codes: np.ndarray, weights: np.ndarray) -> None:
        self._pending_codes.append(codes)
        self._pending_weights.append(weights)
        self._pending += len(codes)
        if self._pending >= _FLUSH_PAIRS:
            self.flush()

    def flush(self) -> None:
        if not self._pending_codes:
            return
        codes = np.concatenate([self.codes, *self._pending_codes])
        weights = np.concatenate([self.weights, *self._pending_weights])
        self.codes, inverse = np.unique(codes, return_inverse=True)
        self.weights = np.bincount(inverse, weights=weights, minlength=len(self.codes)).astype(np.int64)
        self._pending_codes, self._pending_weights, self._pending = [], [], 0


_TRIU_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _triu(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _TRIU_CACHE:
        if len(_TRIU_CACHE) > 512:
            _TRIU_CACHE.clear()
        _TRIU_CACHE[n] = np.triu_indices(n, 1)
    return _TRIU_CACHE[n]


def build_cooc_graph(
    docs: Iterable[tuple[str, Iterable[str] | Mapping[str, EntityCategory | None]]],
    mention_level: bool = False,
) -> WeightedGraph:
    """Build the co-occurrence graph from ``(doc_id, entities)`` pairs.

    ``entities`` is either an iterable of keys (repeats are mentions) or a
    mapping from key to category. By default each document adds 1 to every
    pair of distinct keys it contains; with ``mention_level`` a pair gains
    ``count(a) * count(b)`` instead. A node's first known category is kept.
    """
    index: dict[str, int] = {}
    keys: list[str] = []
    categories: list[EntityCategory | None] = []
    doc_freq: list[int] = []
    acc = _PairAccumulator()

    for _doc_id, ents in docs:
        if isinstance(ents, Mapping):
            mentions = Counter({k: 1 for k in ents})
            cat_of = ents
        else:
            mentions = Counter(ents)
            cat_of = {}
        ids = []
        for key, _ in mentions.items():
            i = index.get(key)
            if i is None:
                i = index[key] = len(keys)
                keys.append(key)
                categories.append(None)
                doc_freq.append(0)
            doc_freq[i] += 1
            if categories[i] is None and cat_of.get(key) is not None:
                categories[i] = cat_of[key]
            ids.append(i)
        if len(ids) < 2:
            continue
        ids_arr = np.asarray(ids, dtype=np.int64)
        order = np.argsort(ids_arr)
        ids_arr = ids_arr[order]
        r, c = _triu(len(ids_arr))
        codes = (ids_arr[r] << 32) | ids_arr[c]
        if mention_level:
            counts = np.asarray(list(mentions.values()), dtype=np.int64)[order]
            weights = counts[r] * counts[c]
        else:
            weights = np.ones(len(codes), dtype=np.int64)
        acc.add(codes, weights)
    acc.flush()

    # relabel ids in string order so every code already reads (smaller, larger)
    order = sorted(range(len(keys)), key=keys.__getitem__)
    rank = np.empty(len(keys), dtype=np.int64)
    rank[order] = np.arange(len(keys))
    lo, hi = rank[acc.codes >> 32], rank[acc.codes & 0xFFFFFFFF]
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    by_key = np.lexsort((hi, lo))
    sorted_keys = [keys[i] for i in order]

    g = WeightedGraph()
    for i in order:
        g.nodes[keys[i]] = NodeInfo(categories[i], doc_freq[i])
    ends = zip(
        map(sorted_keys.__getitem__, lo[by_key].tolist()),
        map(sorted_keys.__getitem__, hi[by_key].tolist()),
    )
    g.edges = dict(zip(ends, acc.weights[by_key].tolist()))
    return g


def merge_graphs(*graphs: WeightedGraph) -> WeightedGraph:
    """Combine shard graphs: doc_freq and edge weights add, first category wins."""
    out = WeightedGraph()
    for g in graphs:
        for key, info in g.nodes.items():
            node = out.add_node(key, info.category)
            node.doc_freq += info.doc_freq
        for k, w in g.edges.items():
            out.edges[k] = out.edges.get(k, 0) + w
    return out


def collect_entity_records(
    docs: Iterable[tuple[str, Iterable[str]]],
    categories: Mapping[str, EntityCategory | None] | None = None,
) -> dict[str, EntityRecord]:
    records: dict[str, EntityRecord] = {}
    cats = categories or {}
    for doc_id, keys in docs:
        seen = set()
        for key in keys:
            rec = records.get(key)
            if rec is None:
                rec = records[key] = EntityRecord(key, cats.get(key))
            rec.mention_count += 1
            if key not in seen:
                rec.doc_ids.append(doc_id)
                seen.add(key)
    return records


# ---------------------------------------------------------------------------
# ego graphs


def _top_k(scored: Iterable[tuple[str, float]], k: int) -> list[tuple[str, float]]:
    if k < 0:
        raise ValueError("k must be nonnegative")
    return sorted(scored, key=lambda kv: (-kv[1], kv[0]))[:k]


def ego_by_frequency(
    g: WeightedGraph,
    source: str,
    filter: EntityCategory | None = None,
    k: int = 10,
) -> EgoGraph:
    nbrs = g.neighbors(source)
    if filter is not None:
        nbrs = {n: w for n, w in nbrs.items() if g.nodes[n].category == filter}
    return EgoGraph(source, _top_k(nbrs.items(), k), "cooccurrence")


def ego_by_similarity(emb, source: str, candidates: Iterable[str] | None = None, k: int = 10) -> EgoGraph:
    """Rank ``candidates`` by cosine similarity to ``source`` in ``emb``.

    ``candidates`` defaults to the whole vocabulary; the source itself is
    never returned as its own neighbor.
    """
    from .embed import EmbeddingError

    src = emb.vector(source)
    pool = sorted(set(emb.keys if candidates is None else candidates) - {source})
    if not pool:
        return EgoGraph(source, [], "cosine")
    M = np.vstack([emb.vector(key) for key in pool]).astype(np.float64)
    norms = np.linalg.norm(M, axis=1)
    src = np.asarray(src, dtype=np.float64)
    src_norm = np.linalg.norm(src)
    if src_norm == 0:
        raise EmbeddingError(f"undefined cosine: zero vector for {source!r}")
    if np.any(norms == 0):
        raise EmbeddingError(f"undefined cosine: zero vector for {pool[int(np.argmin(norms))]!r}")
    sims = np.clip((M @ src) / (norms * src_norm), -1.0, 1.0)
    return EgoGraph(source, _top_k(zip(pool, sims.tolist()), k), "cosine")


# ---------------------------------------------------------------------------
# CSV files


def write_nodes_csv(g: WeightedGraph, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "category", "doc_freq"])
        for key in sorted(g.nodes):
            info = g.nodes[key]
            w.writerow([key, info.category.value if info.category else UNKNOWN, info.doc_freq])


def write_edges_csv(g: WeightedGraph, path: str | Path, min_weight: float = 0.0) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "weight"])
        w.writerows(
            (a, b, weight if type(weight) is int else format_weight(weight))
            for (a, b), weight in sorted(g.edges.items())
            if weight >= min_weight
        )


def _rows(path: Path, header: list[str]):
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1 and row == header:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns")
            yield lineno, row


def read_graph_csv(nodes_path: str | Path | None, edges_path: str | Path) -> WeightedGraph:
    g = WeightedGraph()
    if nodes_path is not None:
        for _, (key, cat, df) in _rows(Path(nodes_path), ["key", "category", "doc_freq"]):
            g.nodes[key] = NodeInfo(None if cat == UNKNOWN else EntityCategory.parse(cat), int(df))
    for lineno, (a, b, weight) in _rows(Path(edges_path), ["source", "target", "weight"]):
        try:
            g.add_edge(a, b, parse_weight(weight))
        except ValueError as exc:
            raise ValueError(f"{edges_path}:{lineno}: {exc}") from None
    return g


def write_ego_csv(ego: EgoGraph, path: str | Path) -> None:
    """Headerless ``neighbor,weight`` rows, best first."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for key, weight in ego.neighbors:
            w.writerow([key, format_weight(weight)])
