"""Finite graphs, directed edges, edge stars and good sets."""

import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import networkx as nx

from errors import BoundaryStarError, ValidationError
from lattices import LatticeSpec

logger = logging.getLogger(__name__)


class DirectedEdge(NamedTuple):
    """An edge with an orientation: tail f- and tip f+."""
    tail: int
    tip: int

    def reverse(self) -> "DirectedEdge":
        return DirectedEdge(self.tip, self.tail)

    def undirected(self) -> tuple:
        return (self.tail, self.tip) if self.tail < self.tip else (self.tip, self.tail)

    def __str__(self):
        return f"{self.tail}-{self.tip}"


@dataclass(frozen=True)
class EdgeStar:
    """The edges E_v leaving a vertex, in natural order."""
    center: int
    edges: tuple
    directions: Optional[tuple] = None  # lattice direction index per edge

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)


class FiniteGraph:
    """A finite connected simple graph with an optional Dirichlet boundary.

    With a non-empty boundary the spanning-tree measure is the one of the
    wired graph: all boundary vertices are glued into a single root. Edges
    between two boundary vertices are never stored.
    """

    def __init__(
        self,
        n: int,
        edges: Iterable,
        boundary: Iterable = (),
        labels: Optional[list] = None,
        lattice: Optional[LatticeSpec] = None,
        stars: Optional[dict] = None,
    ):
        if n < 1:
            raise ValidationError("graph has no vertices")
        self.n = n
        self.boundary = frozenset(boundary)
        if not self.boundary <= set(range(n)):
            raise ValidationError("boundary is not a subset of the vertices")
        self.labels = list(labels) if labels is not None else list(range(n))
        self.lattice = lattice
        self._stars = stars or {}

        seen = set()
        edge_list = []
        adjacency = [[] for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError(f"edge {u}-{v} references an unknown vertex")
            if u == v:
                raise ValidationError(f"self-loop at {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValidationError(f"multi-edge {u}-{v}")
            if u in self.boundary and v in self.boundary:
                continue
            seen.add(key)
            edge_list.append(DirectedEdge(u, v))
            adjacency[u].append(v)
            adjacency[v].append(u)

        self.edges = tuple(edge_list)
        self.adjacency = tuple(tuple(sorted(a)) for a in adjacency)
        self._edge_index = {}
        for i, e in enumerate(self.edges):
            self._edge_index[e] = (i, 1)
            self._edge_index[e.reverse()] = (i, -1)

        if not nx.is_connected(self.to_networkx()):
            raise ValidationError("graph is not connected")

    @property
    def vertices(self) -> range:
        return range(self.n)

    @property
    def interior(self) -> tuple:
        return tuple(v for v in range(self.n) if v not in self.boundary)

    def is_interior(self, v: int) -> bool:
        return v not in self.boundary

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return DirectedEdge(u, v) in self._edge_index

    def edge_index(self, e) -> int:
        """Index of the undirected edge underlying `e`."""
        try:
            return self._edge_index[DirectedEdge(*e)][0]
        except KeyError:
            raise ValidationError(f"{e[0]}-{e[1]} is not an edge of the graph")

    def canonical(self, e) -> tuple:
        """(edge in natural orientation, +1 or -1 relative to `e`)."""
        e = DirectedEdge(*e)
        if e not in self._edge_index:
            raise ValidationError(f"{e} is not an edge of the graph")
        i, sign = self._edge_index[e]
        return self.edges[i], sign

    def tree_size(self) -> int:
        """Number of edges in a spanning tree of the (wired) graph."""
        if self.boundary:
            return self.n - len(self.boundary)
        return self.n - 1

    def wired(self) -> tuple:
        """(node count, root, endpoint pairs per edge index) of the wired multigraph.

        Interior vertices keep their ids; all boundary vertices map to one
        root. Without a boundary the graph is returned unchanged with root 0.
        """
        if not self.boundary:
            return self.n, 0, [tuple(e) for e in self.edges]
        interior = self.interior
        relabel = {v: i for i, v in enumerate(interior)}
        root = len(interior)
        for b in self.boundary:
            relabel[b] = root
        return root + 1, root, [(relabel[e.tail], relabel[e.tip]) for e in self.edges]

    def star_directions(self, v: int) -> Optional[list]:
        """(direction, neighbor) pairs for lattice grids, None otherwise."""
        return self._stars.get(v)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def label(self, v: int):
        return self.labels[v]

    def __repr__(self):
        return (
            f"FiniteGraph(n={self.n}, edges={len(self.edges)}, "
            f"boundary={len(self.boundary)}, lattice={self.lattice.name if self.lattice else None})"
        )


def edge_star(graph: FiniteGraph, v: int) -> EdgeStar:
    """All directed edges with tail v, in natural orientation order."""
    if not 0 <= v < graph.n:
        raise ValidationError(f"vertex {v} not in graph")
    if not graph.is_interior(v):
        raise BoundaryStarError(v)

    lattice_star = graph.star_directions(v)
    if lattice_star is not None:
        return EdgeStar(
            center=v,
            edges=tuple(DirectedEdge(v, w) for _, w in lattice_star),
            directions=tuple(d for d, _ in lattice_star),
        )
    return EdgeStar(center=v, edges=tuple(DirectedEdge(v, w) for w in graph.adjacency[v]))


def is_good_set(graph: FiniteGraph, V: Iterable) -> bool:
    """True iff no two members of V are nearest neighbors."""
    V = list(V)
    for v in V:
        if not 0 <= v < graph.n:
            raise ValidationError(f"vertex {v} not in graph")
    members = set(V)
    return not any(w in members for v in members for w in graph.adjacency[v])


def adjacent_pair(graph: FiniteGraph, V: Iterable) -> Optional[tuple]:
    """First adjacent pair inside V, if any."""
    members = sorted(set(V))
    for v in members:
        for w in graph.adjacency[v]:
            if w in members and v < w:
                return (v, w)
    return None


def build_grid(lattice: LatticeSpec, region) -> FiniteGraph:
    """Induced lattice graph on a region, with boundary = exterior vertex boundary.

    Interior vertices get ids 0..k-1 in sorted coordinate order, boundary
    vertices follow. Labels are the lattice points.
    """
    points = region.points(lattice)
    if not points:
        raise ValidationError(f"region {region} contains no {lattice.name} points")

    interior = sorted(points)
    boundary = sorted({q for p in interior for _, q in lattice.neighbors(p) if q not in points})
    ids = {p: i for i, p in enumerate(interior + boundary)}

    inner = nx.Graph()
    inner.add_nodes_from(range(len(interior)))
    edges = []
    stars = {}
    for p in interior:
        star = []
        for direction, q in lattice.neighbors(p):
            star.append((direction, ids[q]))
            if q in points and not lattice.is_natural(p, direction):
                continue
            if lattice.is_natural(p, direction):
                edges.append((ids[p], ids[q]))
            else:
                edges.append((ids[q], ids[p]))
            if q in points:
                inner.add_edge(ids[p], ids[q])
        stars[ids[p]] = star

    if not nx.is_connected(inner):
        raise ValidationError(f"region {region} induces a disconnected interior on {lattice.name}")

    graph = FiniteGraph(
        n=len(ids),
        edges=edges,
        boundary=range(len(interior), len(ids)),
        labels=interior + boundary,
        lattice=lattice,
        stars=stars,
    )
    logger.debug("built %s on %s: %d interior, %d boundary", lattice.name, region, len(interior), len(boundary))
    return graph


def vertex_at(graph: FiniteGraph, point) -> int:
    """Vertex id of a lattice point on a grid built by build_grid."""
    try:
        return graph.labels.index(tuple(point))
    except ValueError:
        raise ValidationError(f"point {tuple(point)} is not a vertex of the grid")


def from_networkx(g: nx.Graph, boundary: Iterable = ()) -> FiniteGraph:
    """Dense-indexed FiniteGraph from a networkx graph (node order preserved)."""
    nodes = list(g.nodes)
    index = {node: i for i, node in enumerate(nodes)}
    return FiniteGraph(
        n=len(nodes),
        edges=[(index[u], index[v]) if index[u] < index[v] else (index[v], index[u]) for u, v in g.edges],
        boundary=[index[b] for b in boundary],
        labels=nodes,
    )


def complete_graph(n: int) -> FiniteGraph:
    """K_n without boundary."""
    if n < 2:
        raise ValidationError("complete graph needs n >= 2")
    return from_networkx(nx.complete_graph(n))


def cycle_graph(n: int) -> FiniteGraph:
    """C_n without boundary."""
    if n < 3:
        raise ValidationError("cycle needs n >= 3")
    return from_networkx(nx.cycle_graph(n))


def path_graph(n: int) -> FiniteGraph:
    """P_n without boundary."""
    return from_networkx(nx.path_graph(n))


def grid_graph(width: int, height: int) -> FiniteGraph:
    """Plain width x height grid graph without boundary (every vertex keeps its own star)."""
    return from_networkx(nx.grid_2d_graph(width, height))
