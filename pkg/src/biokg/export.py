"""Graph serialization: GEXF 1.2 for Gephi, Graphviz DOT, and edge-list CSV.

Output is byte-deterministic: nodes and edges are written in ascending key
order and nothing time-dependent goes into the documents.
"""
from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, TextIO

from .graph import EgoGraph, NodeInfo, WeightedGraph, format_weight, parse_weight
from .typeclass import EntityCategory

GEXF_NS = "http://www.gexf.net/1.2draft"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"
GEXF_SCHEMA = "http://www.gexf.net/1.2draft http://www.gexf.net/1.2draft/gexf.xsd"
FORMATS = ("gexf", "dot", "edge_csv")
EXTENSIONS = {"gexf": ".gexf", "dot": ".dot", "edge_csv": ".csv"}


class ExportError(OSError):
    pass


@dataclass(frozen=True)
class ExportSpec:
    format: str = "gexf"
    include_categories: bool = True
    min_weight: float = 0.0

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"unknown export format {self.format!r}; expected one of {FORMATS}")
        if self.min_weight < 0:
            raise ValueError("min_weight must be nonnegative")


def _as_graph(g: WeightedGraph | EgoGraph) -> WeightedGraph:
    return g.to_graph() if isinstance(g, EgoGraph) else g


def _kept_edges(g: WeightedGraph, min_weight: float):
    for key in sorted(g.edges):
        w = g.edges[key]
        if w >= min_weight:
            yield key, w


def render_gexf(g: WeightedGraph, spec: ExportSpec) -> str:
    ET.register_namespace("", GEXF_NS)
    ET.register_namespace("xsi", XSI_NS)
    root = ET.Element(f"{{{GEXF_NS}}}gexf", {
        "version": "1.2",
        f"{{{XSI_NS}}}schemaLocation": GEXF_SCHEMA,
    })
    meta = ET.SubElement(root, f"{{{GEXF_NS}}}meta")
    ET.SubElement(meta, f"{{{GEXF_NS}}}creator").text = "biokg"
    graph = ET.SubElement(root, f"{{{GEXF_NS}}}graph", {"defaultedgetype": "undirected", "mode": "static"})
    if spec.include_categories:
        attrs = ET.SubElement(graph, f"{{{GEXF_NS}}}attributes", {"class": "node", "mode": "static"})
        ET.SubElement(attrs, f"{{{GEXF_NS}}}attribute", {"id": "category", "title": "category", "type": "string"})
        ET.SubElement(attrs, f"{{{GEXF_NS}}}attribute", {"id": "doc_freq", "title": "doc_freq", "type": "integer"})
    nodes = ET.SubElement(graph, f"{{{GEXF_NS}}}nodes")
    for key in sorted(g.nodes):
        node = ET.SubElement(nodes, f"{{{GEXF_NS}}}node", {"id": key, "label": key})
        if spec.include_categories:
            info = g.nodes[key]
            values = ET.SubElement(node, f"{{{GEXF_NS}}}attvalues")
            cat = info.category.value if info.category else "unknown"
            ET.SubElement(values, f"{{{GEXF_NS}}}attvalue", {"for": "category", "value": cat})
            ET.SubElement(values, f"{{{GEXF_NS}}}attvalue", {"for": "doc_freq", "value": str(info.doc_freq)})
    edges = ET.SubElement(graph, f"{{{GEXF_NS}}}edges")
    for i, ((a, b), w) in enumerate(_kept_edges(g, spec.min_weight)):
        ET.SubElement(edges, f"{{{GEXF_NS}}}edge", {
            "id": str(i), "source": a, "target": b, "weight": format_weight(w),
        })
    ET.indent(root, space="  ")
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(g: WeightedGraph, spec: ExportSpec) -> str:
    lines = ["graph kg {"]
    for key in sorted(g.nodes):
        info = g.nodes[key]
        if spec.include_categories:
            cat = info.category.value if info.category else "unknown"
            lines.append(f"  {_dot_id(key)} [label={_dot_id(key)}, category={_dot_id(cat)}, doc_freq={info.doc_freq}];")
        else:
            lines.append(f"  {_dot_id(key)} [label={_dot_id(key)}];")
    for (a, b), w in _kept_edges(g, spec.min_weight):
        text = format_weight(w)
        lines.append(f"  {_dot_id(a)} -- {_dot_id(b)} [weight={text}, penwidth={text}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_edge_csv(g: WeightedGraph, spec: ExportSpec) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "target", "weight"])
    for (a, b), weight in _kept_edges(g, spec.min_weight):
        w.writerow([a, b, format_weight(weight)])
    return buf.getvalue()


_RENDERERS = {"gexf": render_gexf, "dot": render_dot, "edge_csv": render_edge_csv}


def export_graph(g: WeightedGraph | EgoGraph, spec: ExportSpec, out: str | Path | BinaryIO | TextIO) -> int:
    """Write ``g`` in ``spec.format`` to a path or open file; returns bytes written."""
    graph = _as_graph(g)
    graph.validate()
    data = _RENDERERS[spec.format](graph, spec).encode("utf-8")
    name = out if isinstance(out, (str, Path)) else getattr(out, "name", repr(out))
    try:
        if isinstance(out, (str, Path)):
            Path(out).write_bytes(data)
        else:
            try:
                out.write(data)
            except TypeError:
                out.write(data.decode("utf-8"))
    except OSError as exc:
        raise ExportError(f"failed to write {spec.format} export to {name}: {exc}") from exc
    return len(data)


# ---------------------------------------------------------------------------
# readers (round-trip checks, re-import)


def read_gexf(source: str | Path | bytes) -> WeightedGraph:
    if isinstance(source, bytes):
        root = ET.fromstring(source)
    else:
        root = ET.parse(source).getroot()
    ns = {"g": GEXF_NS}
    graph_el = root.find("g:graph", ns)
    if graph_el is None:
        raise ValueError("no <graph> element in GEXF document")
    g = WeightedGraph()
    for node in graph_el.iterfind("g:nodes/g:node", ns):
        values = {v.get("for"): v.get("value") for v in node.iterfind("g:attvalues/g:attvalue", ns)}
        cat = values.get("category")
        g.nodes[node.get("id")] = NodeInfo(
            None if cat in (None, "unknown") else EntityCategory.parse(cat),
            int(values.get("doc_freq", 0)),
        )
    for edge in graph_el.iterfind("g:edges/g:edge", ns):
        g.add_edge(edge.get("source"), edge.get("target"), parse_weight(edge.get("weight", "1")))
    return g


def read_edge_csv(path: str | Path) -> WeightedGraph:
    return parse_edge_csv(Path(path).read_text(encoding="utf-8"))


def parse_edge_csv(text: str) -> WeightedGraph:
    g = WeightedGraph()
    rows = csv.reader(io.StringIO(text))
    for i, row in enumerate(rows):
        if not row or (i == 0 and row == ["source", "target", "weight"]):
            continue
        a, b, w = row
        g.add_edge(a, b, parse_weight(w))
    return g
