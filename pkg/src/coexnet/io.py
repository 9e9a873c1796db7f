"""File formats: graph JSON, GraphML, DOT, model snapshots and cluster tables.

Every writer is deterministic (sorted keys, shortest round-trip float
repr), so each format round-trips byte for byte through its reader.
"""
from __future__ import annotations

import csv
import io
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cluster import ClusterGraph, GeneUncertainty
from .errors import ParseError
from .graph import PerfectSequence, UndirectedGraph
from .stats import DecomposableModel

__all__ = [
    "GRAPH_FORMAT",
    "MODEL_FORMAT",
    "GraphDocument",
    "graph_to_json",
    "graph_from_json",
    "graph_to_graphml",
    "graph_from_graphml",
    "graph_to_dot",
    "graph_from_dot",
    "model_to_json",
    "model_from_json",
    "cluster_table",
    "read_cluster_table",
    "gene_table",
    "read_gene_table",
    "cluster_graph_document",
]

GRAPH_FORMAT = "coexnet.graph/1"
MODEL_FORMAT = "coexnet.model/1"
CLUSTERS_HEADER = ["cluster_id", "class", "size", "eta", "rho0", "rho", "members"]
GENES_HEADER = ["name", "de", "cluster_id", "rho"]

DE_COLOR = "red"
NON_DE_COLOR = "blue"


@dataclass
class GraphDocument:
    """A graph plus per-vertex attributes, the unit all graph formats carry.

    ``attrs`` maps attribute name to one value per vertex. ``names`` and
    ``de`` (0/1) are the conventional attributes; cluster graphs add
    ``size``, ``class``, ``eta``, ``rho0`` and ``rho``.
    """

    graph: UndirectedGraph
    attrs: dict[str, list]

    @property
    def names(self) -> list[str]:
        return self.attrs.get("name") or [str(v) for v in range(self.graph.vertex_count)]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def graph_to_json(doc: GraphDocument) -> str:
    body = {
        "format": GRAPH_FORMAT,
        "vertex_count": doc.graph.vertex_count,
        "edges": [list(e) for e in doc.graph.edges()],
        "attrs": {k: [v.item() if isinstance(v, np.generic) else v for v in vals] for k, vals in sorted(doc.attrs.items())},
    }
    return json.dumps(body, sort_keys=True, separators=(",", ":")) + "\n"


def graph_from_json(text: str) -> GraphDocument:
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"graph file is not valid JSON: {exc}") from None
    if body.get("format") != GRAPH_FORMAT:
        raise ParseError(f"unsupported graph format {body.get('format')!r}, expected {GRAPH_FORMAT!r}")
    p = body["vertex_count"]
    try:
        g = UndirectedGraph(p, (tuple(e) for e in body["edges"]))
    except (ValueError, IndexError) as exc:
        raise ParseError(f"invalid edge list: {exc}") from None
    attrs = body.get("attrs", {})
    for k, vals in attrs.items():
        if len(vals) != p:
            raise ParseError(f"attribute {k!r} has {len(vals)} values for {p} vertices")
    return GraphDocument(g, attrs)


_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def _graphml_type(vals: Sequence) -> str:
    if all(isinstance(v, (bool, np.bool_, int, np.integer)) for v in vals):
        return "int"
    if all(isinstance(v, (int, float, np.integer, np.floating)) for v in vals):
        return "double"
    return "string"


def graph_to_graphml(doc: GraphDocument) -> str:
    root = ET.Element("graphml", {"xmlns": _GRAPHML_NS})
    keys = sorted(doc.attrs)
    for k in keys:
        ET.SubElement(root, "key", {"id": k, "for": "node", "attr.name": k, "attr.type": _graphml_type(doc.attrs[k])})
    graph = ET.SubElement(root, "graph", {"id": "G", "edgedefault": "undirected"})
    for v in range(doc.graph.vertex_count):
        node = ET.SubElement(graph, "node", {"id": f"n{v}"})
        for k in keys:
            ET.SubElement(node, "data", {"key": k}).text = _fmt(doc.attrs[k][v])
    for i, j in doc.graph.edges():
        ET.SubElement(graph, "edge", {"source": f"n{i}", "target": f"n{j}"})
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def graph_from_graphml(text: str) -> GraphDocument:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"invalid GraphML: {exc}") from None
    ns = {"g": _GRAPHML_NS}
    types = {k.get("id"): k.get("attr.type") for k in root.findall("g:key", ns)}
    graph = root.find("g:graph", ns)
    if graph is None:
        raise ParseError("GraphML has no graph element")
    nodes = graph.findall("g:node", ns)
    index = {n.get("id"): v for v, n in enumerate(nodes)}
    attrs: dict[str, list] = {k: [] for k in types}
    for n in nodes:
        found = {d.get("key"): d.text or "" for d in n.findall("g:data", ns)}
        for k, t in types.items():
            attrs[k].append(_CAST.get(t, str)(found[k]))
    g = UndirectedGraph(len(nodes))
    for e in graph.findall("g:edge", ns):
        g.add_edge(index[e.get("source")], index[e.get("target")])
    return GraphDocument(g, attrs)


def _dot_quote(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(doc: GraphDocument) -> str:
    """DOT text; vertices are coloured by their ``de`` attribute when present."""
    lines = ["graph G {"]
    keys = sorted(doc.attrs)
    if keys:
        types = ";".join(f"{k}:{_graphml_type(doc.attrs[k])}" for k in keys)
        lines.append(f"  graph [attr_types={_dot_quote(types)}];")
    de = doc.attrs.get("de")
    for v in range(doc.graph.vertex_count):
        parts = [f"{k}={_dot_quote(_fmt(doc.attrs[k][v]))}" for k in keys]
        if de is not None:
            parts.append(f"color={DE_COLOR if int(de[v]) else NON_DE_COLOR}")
        if "name" in doc.attrs:
            parts.append(f"label={_dot_quote(doc.attrs['name'][v])}")
        lines.append(f"  {v} [{', '.join(parts)}];" if parts else f"  {v};")
    for i, j in doc.graph.edges():
        lines.append(f"  {i} -- {j};")
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_NODE = re.compile(r"^\s*(\d+)\s*(?:\[(.*)\])?;\s*$")
_DOT_EDGE = re.compile(r"^\s*(\d+)\s*--\s*(\d+);\s*$")
_DOT_ATTR = re.compile(r'(\w+)=("(?:[^"\\]|\\.)*"|\w+)')
_DOT_TYPES = re.compile(r'^\s*graph\s*\[attr_types="([^"]*)"\];\s*$')
_CAST = {"int": int, "double": float, "string": str}


def graph_from_dot(text: str) -> GraphDocument:
    """Read DOT as written by :func:`graph_to_dot`, restoring attribute types."""
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("graph") or lines[-1].strip() != "}":
        raise ParseError("not an undirected DOT graph")
    nodes: list[dict[str, str]] = []
    edges = []
    types: dict[str, str] = {}
    for line in lines[1:-1]:
        m = _DOT_TYPES.match(line)
        if m:
            types = dict(item.split(":", 1) for item in m.group(1).split(";") if item)
            continue
        m = _DOT_EDGE.match(line)
        if m:
            edges.append((int(m.group(1)), int(m.group(2))))
            continue
        m = _DOT_NODE.match(line)
        if not m:
            raise ParseError(f"unrecognised DOT line: {line!r}")
        found = {}
        for k, v in _DOT_ATTR.findall(m.group(2) or ""):
            if v.startswith('"'):
                v = re.sub(r"\\(.)", r"\1", v[1:-1])
            found[k] = v
        nodes.append(found)
    keys = sorted({k for n in nodes for k in n} - {"color", "label"})
    try:
        attrs = {k: [_CAST.get(types.get(k), str)(n.get(k, "")) for n in nodes] for k in keys}
    except ValueError as exc:
        raise ParseError(f"DOT attribute does not match its declared type: {exc}") from None
    if "name" not in attrs and any("label" in n for n in nodes):
        attrs["name"] = [n.get("label", "") for n in nodes]
    return GraphDocument(UndirectedGraph(len(nodes), edges), attrs)


def model_to_json(model: DecomposableModel, names: Sequence[str], sigma_file: str | None = None) -> str:
    """Fitted statistics; the covariance itself is stored separately as ``.npy``."""
    body = {
        "format": MODEL_FORMAT,
        "n": model.n,
        "p": model.p,
        "edge_count": model.graph.edge_count,
        "kappa": model.kappa,
        "loglik": model.loglik,
        "bic": model.bic,
        "names": list(names),
        "mean": [float(x) for x in model.mean],
        "cliques": [sorted(c) for c in model.sequence.cliques],
        "separators": [sorted(s) for s in model.sequence.separators],
        "sigma": sigma_file,
    }
    return json.dumps(body, sort_keys=True, indent=1) + "\n"


def model_from_json(text: str) -> dict:
    body = json.loads(text)
    if body.get("format") != MODEL_FORMAT:
        raise ParseError(f"unsupported model format {body.get('format')!r}, expected {MODEL_FORMAT!r}")
    body["sequence"] = PerfectSequence(
        tuple(frozenset(c) for c in body["cliques"]), tuple(frozenset(s) for s in body["separators"])
    )
    return body


def cluster_table(cg: ClusterGraph, names: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CLUSTERS_HEADER)
    for k, cl in enumerate(cg.clusters):
        members = ";".join(names[v] for v in sorted(cl.members))
        w.writerow([k, cl.cls, cl.size, cl.eta, repr(cl.rho0), repr(cl.rho), members])
    return buf.getvalue()


def read_cluster_table(text: str) -> list[dict]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CLUSTERS_HEADER:
        raise ParseError("cluster table header mismatch")
    out = []
    for r in rows[1:]:
        out.append(
            {
                "cluster_id": int(r[0]),
                "class": r[1],
                "size": int(r[2]),
                "eta": int(r[3]),
                "rho0": float(r[4]),
                "rho": float(r[5]),
                "members": r[6].split(";") if r[6] else [],
            }
        )
    return out


def write_cluster_rows(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CLUSTERS_HEADER)
    for r in rows:
        w.writerow([r["cluster_id"], r["class"], r["size"], r["eta"], repr(r["rho0"]), repr(r["rho"]), ";".join(r["members"])])
    return buf.getvalue()


def gene_table(cg: ClusterGraph, genes: Sequence[GeneUncertainty], names: Sequence[str], labels) -> str:
    """One row per vertex; ``rho`` is blank for non-DE vertices."""
    where = cg.cluster_of()
    rho = {g.vertex: g.rho for g in genes}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GENES_HEADER)
    for v, name in enumerate(names):
        w.writerow([name, int(bool(labels[v])), int(where[v]), repr(rho[v]) if v in rho else ""])
    return buf.getvalue()


def read_gene_table(text: str) -> list[dict]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != GENES_HEADER:
        raise ParseError("gene table header mismatch")
    return [
        {"name": r[0], "de": int(r[1]), "cluster_id": int(r[2]), "rho": float(r[3]) if r[3] else None}
        for r in rows[1:]
    ]


def write_gene_rows(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GENES_HEADER)
    for r in rows:
        w.writerow([r["name"], r["de"], r["cluster_id"], "" if r["rho"] is None else repr(r["rho"])])
    return buf.getvalue()


def cluster_graph_document(cg: ClusterGraph) -> GraphDocument:
    """Cluster graph as a graph document with size/class/eta/rho attributes."""
    g = UndirectedGraph(len(cg.clusters), cg.edges)
    attrs: dict[str, list] = {
        "name": [f"K{k}" for k in range(len(cg.clusters))],
        "class": [cl.cls for cl in cg.clusters],
        "size": [cl.size for cl in cg.clusters],
        "eta": [cl.eta for cl in cg.clusters],
        "rho0": [float(cl.rho0) for cl in cg.clusters],
        "rho": [float(cl.rho) for cl in cg.clusters],
        "de": [int(cl.cls == "DEGD") for cl in cg.clusters],
    }
    return GraphDocument(g, attrs)


def read_graph(path) -> GraphDocument:
    """Dispatch on the file suffix: ``.json``, ``.graphml`` or ``.dot``."""
    path = Path(path)
    text = path.read_text()
    suffix = path.suffix.lower()
    if suffix == ".graphml":
        return graph_from_graphml(text)
    if suffix in (".dot", ".gv"):
        return graph_from_dot(text)
    return graph_from_json(text)


def write_graph(doc: GraphDocument, fmt: str) -> str:
    writers = {"json": graph_to_json, "graphml": graph_to_graphml, "dot": graph_to_dot}
    if fmt not in writers:
        raise ValueError(f"unknown graph format {fmt!r}")
    return writers[fmt](doc)


def labels_document(graph: UndirectedGraph, names: Sequence[str], labels=None) -> GraphDocument:
    attrs: dict[str, list] = {"name": list(names)}
    if labels is not None:
        attrs["de"] = [int(bool(x)) for x in labels]
    return GraphDocument(graph, attrs)

