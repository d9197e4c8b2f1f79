import json

import pytest

from errors import ValidationError
from graphs import build_grid, complete_graph
from lattices import Box, Z2
from storage import GraphFile, Report, graph_from_dict, load_graph, render_report, save_graph, write_report


def test_graph_file_round_trip(tmp_path, box3):
    path = tmp_path / "box.json"
    save_graph(box3, path)
    loaded = load_graph(path)
    assert loaded.n == box3.n
    assert len(loaded.edges) == len(box3.edges)
    assert len(loaded.boundary) == len(box3.boundary)
    assert loaded.label(0) == "0,0"


def test_explicit_graph():
    graph = graph_from_dict({"vertices": ["a", "b", "c"], "edges": [["a", "b"], ["b", "c"]], "boundary": ["c"]})
    assert graph.n == 3
    assert graph.boundary == frozenset({2})
    assert graph.label(1) == "b"


def test_lattice_descriptor():
    graph = graph_from_dict({"lattice": "Z2", "width": 3, "height": 2})
    assert graph.lattice is Z2
    assert len(graph.interior) == 6


@pytest.mark.parametrize(
    "data",
    [
        {"vertices": [0, 0], "edges": []},
        {"vertices": [0, 1], "edges": [[0, 2]]},
        {"vertices": [0, 1], "edges": [[0, 1, 2]]},
        {"vertices": [0, 1]},
        {"nodes": [0, 1]},
    ],
)
def test_malformed_graphs(data):
    with pytest.raises(ValidationError):
        graph_from_dict(data)


def test_load_errors(tmp_path):
    with pytest.raises(ValidationError):
        load_graph(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        load_graph(bad)


def test_graph_file_from_graph():
    data = GraphFile.from_graph(complete_graph(3)).to_dict()
    assert data == {"vertices": [0, 1, 2], "edges": [[0, 1], [0, 2], [1, 2]], "boundary": []}


def test_json_report_is_sorted():
    report = Report("edge-prob", {"probability": 0.5, "method": "det"}, settings={"seed": 1})
    text = render_report(report, "json")
    data = json.loads(text)
    assert data["result"]["probability"] == 0.5
    assert text.index('"result"') < text.index('"settings"') < text.index('"subcommand"')
    assert Report.from_dict(data) == report


def test_csv_report_uses_rows():
    report = Report("degree-pmf", {"vertex": 0}, rows=[{"k": 1, "probability": 0.25}, {"k": 2, "probability": 0.75}])
    lines = render_report(report, "csv").splitlines()
    assert lines == ["k,probability", "1,0.25", "2,0.75"]


def test_csv_report_without_rows():
    lines = render_report(Report("cumulant", {"value": 0.1}), "csv").splitlines()
    assert lines == ["value", "0.1"]


def test_write_report(tmp_path):
    out = tmp_path / "nested" / "report.json"
    text = write_report(Report("green", {"residual": 0.0}), "json", out)
    assert out.read_text() == text
    with pytest.raises(ValidationError):
        render_report(Report("green", {}), "xml")
