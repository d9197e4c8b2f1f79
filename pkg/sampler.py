"""Uniform spanning trees: Wilson's algorithm, exhaustive enumeration, matrix-tree counts.

All three work on the wired multigraph of a FiniteGraph (boundary glued
into one root), so they describe the same measure as the Dirichlet
transfer-current matrix. Trees are sets of edge indices into graph.edges.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Callable, Iterator, Optional

import numpy as np
from scipy import stats

import config
from errors import GuardExceeded, ValidationError
from graphs import FiniteGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpanningTree:
    """A spanning tree as a set of edge indices of its host graph."""
    edges: frozenset

    def contains(self, graph: FiniteGraph, e) -> bool:
        return graph.edge_index(e) in self.edges

    def degree(self, graph: FiniteGraph, v: int) -> int:
        return sum(1 for i in self.edges if v in graph.edges[i])

    def __len__(self):
        return len(self.edges)


@dataclass
class SampleStats:
    """Hit counts of a query over Monte Carlo samples."""
    samples: int
    hits: int

    @property
    def estimate(self) -> float:
        return self.hits / self.samples

    @property
    def se(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.samples)

    def sigmas(self, exact: float) -> float:
        """Distance to an exact value in standard errors (inf if the SE vanishes and they differ)."""
        gap = abs(self.estimate - exact)
        if self.se == 0.0:
            return 0.0 if gap == 0.0 else math.inf
        return gap / self.se

    def merge(self, other: "SampleStats") -> "SampleStats":
        return SampleStats(self.samples + other.samples, self.hits + other.hits)

    def to_dict(self):
        data = asdict(self)
        data.update(estimate=self.estimate, se=self.se)
        return data


# Random streams


def make_rng(seed: int, stream: Optional[int] = None) -> np.random.Generator:
    """Counter-based Philox generator; `stream` selects an independent child stream."""
    seq = np.random.SeedSequence(seed)
    if stream is not None:
        seq = seq.spawn(stream + 1)[stream]
    return np.random.Generator(np.random.Philox(seq))


class _UniformBuffer:
    """Uniform draws fetched in blocks."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buf = rng.random(block)
        self._pos = 0

    def next(self) -> float:
        if self._pos == self.block:
            self._buf = self.rng.random(self.block)
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x


def _wired_adjacency(graph: FiniteGraph) -> tuple:
    n_nodes, root, pairs = graph.wired()
    adjacency = [[] for _ in range(n_nodes)]
    for eid, (a, b) in enumerate(pairs):
        adjacency[a].append((b, eid))
        adjacency[b].append((a, eid))
    return n_nodes, root, adjacency


def _wilson(n_nodes: int, root: int, adjacency: list, uniform: _UniformBuffer) -> frozenset:
    in_tree = [False] * n_nodes
    in_tree[root] = True
    step = [None] * n_nodes
    chosen = []
    for start in range(n_nodes):
        # random walk until the tree is hit; overwriting step[] erases loops
        u = start
        while not in_tree[u]:
            nbrs = adjacency[u]
            step[u] = nbrs[int(uniform.next() * len(nbrs))]
            u = step[u][0]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            w, eid = step[u]
            chosen.append(eid)
            u = w
    return frozenset(chosen)


def wilson_sample(graph: FiniteGraph, seed: int) -> SpanningTree:
    """One uniform spanning tree by loop-erased random walks, deterministic in the seed.

    The root is the wired boundary node, or vertex 0 when there is no boundary.
    """
    n_nodes, root, adjacency = _wired_adjacency(graph)
    return SpanningTree(_wilson(n_nodes, root, adjacency, _UniformBuffer(make_rng(seed))))


def wilson_stream(graph: FiniteGraph, count: int, rng: np.random.Generator) -> Iterator[SpanningTree]:
    n_nodes, root, adjacency = _wired_adjacency(graph)
    uniform = _UniformBuffer(rng)
    for _ in range(count):
        yield SpanningTree(_wilson(n_nodes, root, adjacency, uniform))


# Exact counting and enumeration


def _contract(n_nodes: int, pairs: list, include=(), exclude=()) -> Optional[tuple]:
    """Contract `include` and delete `exclude` edge ids; None if `include` has a cycle."""
    parent = list(range(n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in include:
        a, b = find(pairs[eid][0]), find(pairs[eid][1])
        if a == b:
            return None
        parent[b] = a
    skip = set(include) | set(exclude)
    reps = sorted({find(x) for x in range(n_nodes)})
    relabel = {r: i for i, r in enumerate(reps)}
    rest = []
    for eid, (a, b) in enumerate(pairs):
        if eid in skip:
            continue
        a, b = relabel[find(a)], relabel[find(b)]
        if a != b:
            rest.append((a, b))
    return len(reps), rest


def _tree_count(n_nodes: int, pairs: list) -> int:
    """Matrix-tree theorem on a multigraph."""
    if n_nodes == 1:
        return 1
    L = np.zeros((n_nodes, n_nodes))
    for a, b in pairs:
        L[a, a] += 1.0
        L[b, b] += 1.0
        L[a, b] -= 1.0
        L[b, a] -= 1.0
    sign, logdet = np.linalg.slogdet(L[1:, 1:])
    if sign <= 0:
        return 0
    return int(round(math.exp(logdet)))


def count_trees(graph: FiniteGraph, include=(), exclude=()) -> int:
    """Spanning trees containing `include` and avoiding `exclude` (edges in either orientation)."""
    n_nodes, _, pairs = graph.wired()
    inc = [graph.edge_index(e) for e in include]
    exc = [graph.edge_index(e) for e in exclude]
    if set(inc) & set(exc):
        return 0
    reduced = _contract(n_nodes, pairs, inc, exc)
    if reduced is None:
        return 0
    return _tree_count(*reduced)


def _connected(nodes: set, edges: list) -> bool:
    parent = {x: x for x in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = len(nodes)
    for a, b, _ in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
            components -= 1
    return components == 1


def _trees(nodes: frozenset, edges: list, chosen: tuple) -> Iterator[frozenset]:
    if len(nodes) == 1:
        yield frozenset(chosen)
        return
    edges = [e for e in edges if e[0] != e[1]]
    if not edges:
        return
    (a, b, eid), rest = edges[0], edges[1:]

    merged = [(a if x == b else x, a if y == b else y, i) for x, y, i in rest]
    yield from _trees(nodes - {b}, merged, chosen + (eid,))

    if _connected(set(nodes), rest):
        yield from _trees(nodes, rest, chosen)


def enumerate_trees(graph: FiniteGraph, max_trees: int = config.MAX_TREES) -> Iterator[SpanningTree]:
    """Every spanning tree exactly once, by contraction/deletion."""
    total = count_trees(graph)
    if total > max_trees:
        raise GuardExceeded("spanning-tree enumeration", total, max_trees)
    n_nodes, _, pairs = graph.wired()
    logger.debug("enumerating %d spanning trees", total)
    edges = [(a, b, eid) for eid, (a, b) in enumerate(pairs)]
    for tree in _trees(frozenset(range(n_nodes)), edges, ()):
        yield SpanningTree(tree)


# Queries


def query_predicate(graph: FiniteGraph, query) -> Callable[[SpanningTree], bool]:
    """Turn an EdgeProbQuery or DegreeQuery into a predicate on trees."""
    from degrees import DegreeQuery
    from transfer import EdgeProbQuery

    if isinstance(query, EdgeProbQuery):
        present = [graph.edge_index(e) for e in query.F]
        absent = [graph.edge_index(e) for e in query.G]
        return lambda t: all(i in t.edges for i in present) and not any(i in t.edges for i in absent)
    if isinstance(query, DegreeQuery):
        incident = {v: [i for i, e in enumerate(graph.edges) if v in e] for v in query.V}
        return lambda t: all(
            sum(1 for i in incident[v] if i in t.edges) == k for v, k in zip(query.V, query.k)
        )
    if callable(query):
        return query
    raise ValidationError(f"unsupported query type: {type(query).__name__}")


def exact_probability(graph: FiniteGraph, query, max_trees: int = config.MAX_TREES) -> float:
    """Fraction of enumerated spanning trees satisfying the query."""
    holds = query_predicate(graph, query)
    total = hits = 0
    for tree in enumerate_trees(graph, max_trees):
        total += 1
        hits += holds(tree)
    return hits / total


def count_probability(graph: FiniteGraph, present=(), absent=()) -> float:
    """P(present in T, absent not in T) as a ratio of matrix-tree counts."""
    return count_trees(graph, present, absent) / count_trees(graph)


def mc_estimate(
    graph: FiniteGraph,
    query,
    samples: int = config.SAMPLES,
    seed: int = 0,
    threads: int = 1,
    streams: int = config.MC_STREAMS,
) -> SampleStats:
    """Monte Carlo frequency of a query over Wilson samples.

    Samples are split over a fixed number of streams, so the estimate does
    not depend on the thread count.
    """
    if samples < 1:
        raise ValidationError("samples must be at least 1")
    holds = query_predicate(graph, query)
    streams = min(streams, samples)
    sizes = [samples // streams + (1 if i < samples % streams else 0) for i in range(streams)]

    def run(stream: int) -> SampleStats:
        rng = make_rng(seed, stream)
        hits = sum(1 for tree in wilson_stream(graph, sizes[stream], rng) if holds(tree))
        logger.debug("stream %d: %d/%d hits", stream, hits, sizes[stream])
        return SampleStats(sizes[stream], hits)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(run, range(streams)))
    total = SampleStats(0, 0)
    for part in parts:
        total = total.merge(part)
    return total


def chi_square_uniform(graph: FiniteGraph, samples: int, seed: int, max_trees: int = config.MAX_TREES) -> float:
    """p-value of a chi-square test that Wilson samples are uniform over all trees."""
    trees = {t.edges: i for i, t in enumerate(enumerate_trees(graph, max_trees))}
    counts = np.zeros(len(trees))
    for tree in wilson_stream(graph, samples, make_rng(seed)):
        counts[trees[tree.edges]] += 1
    return float(stats.chisquare(counts).pvalue)


if __name__ == "__main__":
    from graphs import complete_graph

    k4 = complete_graph(4)
    print(f"K4 spanning trees: {count_trees(k4)} (enumerated {sum(1 for _ in enumerate_trees(k4))})")
    print(f"Wilson sample, seed 7: {sorted(wilson_sample(k4, 7).edges)}")
    print(f"chi-square p-value, 20000 samples: {chi_square_uniform(k4, 20000, 1):.3f}")
