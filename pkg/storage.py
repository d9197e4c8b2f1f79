"""Storage module for graph files and run reports."""

import csv
import io
import json
import logging
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Optional

from errors import ValidationError
from graphs import FiniteGraph, build_grid
from lattices import lattice_by_name, region_from_dict

logger = logging.getLogger(__name__)


@dataclass
class GraphFile:
    """The JSON graph format: vertex ids, undirected edges, boundary ids."""
    vertices: list
    edges: list
    boundary: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GraphFile":
        try:
            return cls(
                vertices=list(data["vertices"]),
                edges=[list(e) for e in data["edges"]],
                boundary=list(data.get("boundary", [])),
            )
        except (KeyError, TypeError) as e:
            raise ValidationError(f"malformed graph file: {e}")

    def to_graph(self) -> FiniteGraph:
        index = {}
        for i, v in enumerate(self.vertices):
            if v in index:
                raise ValidationError(f"vertex id {v} listed twice")
            index[v] = i

        def lookup(v):
            if v not in index:
                raise ValidationError(f"unknown vertex id {v}")
            return index[v]

        edges = []
        for e in self.edges:
            if len(e) != 2:
                raise ValidationError(f"edge {e} must have two endpoints")
            edges.append((lookup(e[0]), lookup(e[1])))
        return FiniteGraph(
            n=len(self.vertices),
            edges=edges,
            boundary=[lookup(b) for b in self.boundary],
            labels=list(self.vertices),
        )

    @classmethod
    def from_graph(cls, graph: FiniteGraph) -> "GraphFile":
        labels = [_jsonable(graph.label(v)) for v in graph.vertices]
        return cls(
            vertices=labels,
            edges=[[labels[e.tail], labels[e.tip]] for e in graph.edges],
            boundary=[labels[b] for b in sorted(graph.boundary)],
        )


def _jsonable(label):
    # lattice points become strings like "1,-2" so they stay hashable after a round trip
    if isinstance(label, tuple):
        return ",".join(str(x) for x in label)
    return label


def graph_from_dict(data: dict) -> FiniteGraph:
    """Explicit graphs, or lattice descriptors like {"lattice": "Z2", "width": 3, "height": 3}."""
    if "vertices" in data:
        return GraphFile.from_dict(data).to_graph()
    if "lattice" in data:
        return build_grid(lattice_by_name(data["lattice"]), region_from_dict(data))
    raise ValidationError("graph file needs either 'vertices'/'edges' or a 'lattice' descriptor")


def load_graph(path) -> FiniteGraph:
    """Load a graph from a JSON file."""
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ValidationError(f"graph file not found: {path}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"graph file {path} is not valid JSON: {e}")
    graph = graph_from_dict(data)
    logger.info("loaded %r from %s", graph, path)
    return graph


def save_graph(graph: FiniteGraph, path):
    """Save a graph in the explicit JSON format."""
    with open(path, "w") as f:
        json.dump(GraphFile.from_graph(graph).to_dict(), f, indent=2)


@dataclass
class Report:
    """The output of one CLI run."""
    subcommand: str
    result: object
    settings: dict = field(default_factory=dict)
    rows: Optional[list] = None  # tabular view for CSV output

    def to_dict(self):
        data = {"subcommand": self.subcommand, "result": self.result, "settings": self.settings}
        if self.rows is not None:
            data["rows"] = self.rows
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        return cls(
            subcommand=data["subcommand"],
            result=data["result"],
            settings=data.get("settings", {}),
            rows=data.get("rows"),
        )


def _csv_rows(report: Report) -> list:
    if report.rows is not None:
        return report.rows
    if isinstance(report.result, list):
        return report.result
    return [report.result]


def render_report(report: Report, fmt: str = "json") -> str:
    """JSON (indent 2, sorted keys) or CSV text."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        rows = _csv_rows(report)
        fieldnames = list(dict.fromkeys(key for row in rows for key in row))
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        return buf.getvalue()
    raise ValidationError(f"unknown format {fmt!r}")


def write_report(report: Report, fmt: str = "json", out=None) -> str:
    """Render a report and write it to `out` if given; returns the text."""
    text = render_report(report, fmt)
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(text)
        logger.info("wrote %s report to %s", fmt, path)
    return text
