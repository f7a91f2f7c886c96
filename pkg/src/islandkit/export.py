"""Island solution export to DOT, GraphML and a cut-branch CSV."""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET

from .errors import ConfigurationError
from .grid_model import GridTopology

FORMATS = ("dot", "graphml", "csv")


def _as_dict(solution, topo: GridTopology, snap=None) -> dict:
    if isinstance(solution, dict):
        return solution
    return solution.to_dict(topo, snap)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(sol: dict, topo: GridTopology) -> str:
    cut_ids = {c["id"] for c in sol["cut_set"]}
    lines = ["graph islands {", "  node [shape=circle];"]
    for c, members in enumerate(sol["islands"]):
        lines.append(f"  subgraph cluster_{c} {{")
        lines.append(f'    label="island {c}";')
        for lab in members:
            lines.append(f"    {_quote(lab)} [island={c}];")
        lines.append("  }")
    for br in topo.branches:
        attrs = f"id={_quote(br.id)}"
        if br.id in cut_ids:
            attrs += ", style=dashed, cut=true"
        lines.append(f"  {_quote(br.from_bus.label)} -- {_quote(br.to_bus.label)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_graphml(sol: dict, topo: GridTopology) -> str:
    ns = "http://graphml.graphdrawing.org/xmlns"
    root = ET.Element("graphml", xmlns=ns)
    ET.SubElement(root, "key", {"id": "island", "for": "node", "attr.name": "island", "attr.type": "int"})
    ET.SubElement(root, "key", {"id": "cut", "for": "edge", "attr.name": "cut", "attr.type": "boolean"})
    graph = ET.SubElement(root, "graph", id="islands", edgedefault="undirected")
    assignment = sol["assignment"]
    for lab in topo.labels:
        node = ET.SubElement(graph, "node", id=lab)
        ET.SubElement(node, "data", key="island").text = str(assignment[lab])
    cut_ids = {c["id"] for c in sol["cut_set"]}
    for br in topo.branches:
        edge = ET.SubElement(graph, "edge", id=br.id, source=br.from_bus.label, target=br.to_bus.label)
        ET.SubElement(edge, "data", key="cut").text = "true" if br.id in cut_ids else "false"
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def to_cut_csv(sol: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["branch_id", "from", "to", "P_MW", "Q_Mvar"])
    for c in sol["cut_set"]:
        w.writerow([c["id"], c["from"], c["to"], repr(float(c.get("P_MW", 0.0))), repr(float(c.get("Q_Mvar", 0.0)))])
    return buf.getvalue()


def export_graph(solution, topo: GridTopology, fmt: str, snap=None) -> str:
    """Render ``solution`` (an IslandingSolution or its JSON dict) in ``fmt``."""
    sol = _as_dict(solution, topo, snap)
    if fmt == "dot":
        return to_dot(sol, topo)
    if fmt == "graphml":
        return to_graphml(sol, topo)
    if fmt == "csv":
        return to_cut_csv(sol)
    raise ConfigurationError(f"unknown export format {fmt!r}; expected one of {FORMATS}")
