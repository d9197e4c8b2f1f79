import networkx as nx
import numpy as np
import pytest

import config
from graphs import build_grid, complete_graph, cycle_graph, from_networkx, grid_graph
from green import green_for
from lattices import Box, Z2
from transfer import transfer_matrix


def _atlas():
    out = []
    for g in nx.graph_atlas_g():
        if 3 <= g.number_of_nodes() <= 6 and nx.is_connected(g) and g.number_of_edges() <= 9:
            out.append(g)
    return out[::7]


SMALL_GRAPHS = {
    "K3": lambda: complete_graph(3),
    "K4": lambda: complete_graph(4),
    "K5": lambda: complete_graph(5),
    "C4": lambda: cycle_graph(4),
    "C5": lambda: cycle_graph(5),
    "C6": lambda: cycle_graph(6),
    "grid2x3": lambda: grid_graph(2, 3),
    "grid3x3": lambda: grid_graph(3, 3),
    "box2x2": lambda: build_grid(Z2, Box((2, 2))),
    "box3x2": lambda: build_grid(Z2, Box((3, 2))),
}
for _i, _g in enumerate(_atlas()):
    SMALL_GRAPHS[f"atlas{_i}"] = (lambda g: lambda: from_networkx(g))(_g)


@pytest.fixture(autouse=True)
def isolated_prefs(tmp_path, monkeypatch):
    """Keep tests away from the user's preferences file."""
    monkeypatch.setattr(config, "PREFS_DIR", tmp_path / "prefs")
    monkeypatch.setattr(config, "PREFS_FILE", tmp_path / "prefs" / "preferences.json")
    monkeypatch.delenv(config.THREADS_ENV, raising=False)


@pytest.fixture(params=sorted(SMALL_GRAPHS))
def small_graph(request):
    return SMALL_GRAPHS[request.param]()


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def grid3():
    return grid_graph(3, 3)


@pytest.fixture
def box3():
    """3x3 Z2 box with its Dirichlet boundary."""
    return build_grid(Z2, Box((3, 3)))


@pytest.fixture
def transfer():
    def make(graph):
        return transfer_matrix(green_for(graph))

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
