import itertools
import math

import numpy as np
import pytest

from cumulants import (
    CumulantQuery,
    NeighborSplit,
    PartitionLattice,
    check_bookkeeping,
    cumulant_direct,
    cumulant_from_stars,
    cumulant_via_moments,
    cumulants_from_moments,
    moments_from_cumulants,
    neighbor_cumulant,
    neighbor_groups,
    neighbor_joint_probability,
    subset_multiplicities,
)
from degrees import DegreeQuery, degree_pmf_single
from errors import NotGoodSetError, ValidationError
from graphs import build_grid, complete_graph, edge_star, grid_graph, is_good_set, vertex_at
from lattices import HEXAGONAL, TRIANGULAR, Z2, Box
from sampler import count_trees, enumerate_trees


@pytest.fixture(scope="module")
def grid3_trees():
    graph = grid_graph(3, 3)
    return graph, list(enumerate_trees(graph))


def _brute_cumulant(graph, trees, V, k):
    """Joint cumulant of degree indicators from the list of all spanning trees."""
    indicators = np.array([[float(t.degree(graph, v) == kv) for v, kv in zip(V, k)] for t in trees])
    moments = {}
    for size in range(1, len(V) + 1):
        for block in itertools.combinations(range(len(V)), size):
            moments[frozenset(block)] = float(np.prod(indicators[:, list(block)], axis=1).mean())
    return cumulants_from_moments(moments, range(len(V)))


def test_partition_lattice():
    assert [len(PartitionLattice(n)) for n in range(1, 6)] == [1, 2, 5, 15, 52]
    assert PartitionLattice.mobius(((0,), (1,), (2,))) == 2
    assert PartitionLattice.mobius(((0, 1, 2),)) == 1
    with pytest.raises(ValidationError):
        PartitionLattice(0)


def test_two_point_cumulant_is_covariance():
    moments = {frozenset("x"): 0.5, frozenset("y"): 0.25, frozenset("xy"): 0.2}
    assert cumulants_from_moments(moments, "xy") == pytest.approx(0.2 - 0.125)
    with pytest.raises(ValidationError):
        cumulants_from_moments({frozenset("x"): 0.5}, "xy")


def test_moment_cumulant_inversion(rng):
    labels = "abc"
    moments = {
        frozenset(block): float(rng.random())
        for size in range(1, 4)
        for block in itertools.combinations(labels, size)
    }
    kappa = {key: cumulants_from_moments(moments, sorted(key)) for key in moments}
    assert moments_from_cumulants(kappa, labels) == pytest.approx(moments[frozenset(labels)])


def test_single_point_is_pmf(grid3, transfer):
    M = transfer(grid3)
    for k in (1, 2, 3):
        assert cumulant_direct(M, DegreeQuery((4,), (k,))) == pytest.approx(degree_pmf_single(M, 4, k), abs=1e-12)


@pytest.mark.parametrize("V, k", [((0, 8), (1, 1)), ((0, 8), (2, 1)), ((0, 4), (1, 2)), ((1, 7), (2, 3))])
def test_two_point_cumulants(grid3_trees, transfer, V, k):
    graph, trees = grid3_trees
    M = transfer(graph)
    q = DegreeQuery(V, k)
    expected = _brute_cumulant(graph, trees, V, k)
    assert cumulant_direct(M, q) == pytest.approx(expected, abs=1e-10)
    assert cumulant_direct(M, q, method="permutations") == pytest.approx(expected, abs=1e-10)
    assert cumulant_via_moments(M, q) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("k", [(1, 1, 1), (2, 1, 2), (1, 2, 1)])
def test_three_point_cumulants(grid3_trees, transfer, k):
    graph, trees = grid3_trees
    M = transfer(graph)
    V = (0, 2, 8)
    q = DegreeQuery(V, k)
    expected = _brute_cumulant(graph, trees, V, k)
    assert cumulant_direct(M, q, threads=2) == pytest.approx(expected, abs=1e-10)
    assert cumulant_direct(M, q, method="permutations") == pytest.approx(expected, abs=1e-10)
    assert cumulant_via_moments(M, q) == pytest.approx(expected, abs=1e-10)


def test_cumulant_with_boundary(box3, transfer):
    M = transfer(box3)
    q = DegreeQuery((0, 8), (2, 2))
    assert cumulant_direct(M, q) == pytest.approx(cumulant_via_moments(M, q), abs=1e-10)


def test_impossible_degree_gives_zero(grid3, transfer):
    assert cumulant_direct(transfer(grid3), DegreeQuery((0, 8), (3, 1))) == 0.0


def test_adjacent_points_are_rejected(grid3, transfer):
    M = transfer(grid3)
    with pytest.raises(NotGoodSetError) as err:
        cumulant_direct(M, DegreeQuery((4, 1), (1, 1)))
    assert err.value.pair == (1, 4)
    with pytest.raises(NotGoodSetError):
        cumulant_via_moments(M, DegreeQuery((0, 1), (1, 1)))


def test_groups_must_be_disjoint(grid3, transfer):
    M = transfer(grid3)
    e = grid3.edges[0]
    with pytest.raises(ValidationError):
        cumulant_from_stars(M, [((e,), 1), ((e.reverse(),), 1)])
    with pytest.raises(ValidationError):
        cumulant_from_stars(M, [])


def _neighbor_brute(graph, trees, v, w, k_v, k_w, in_tree):
    e = graph.edge_index((v, w))
    hits = sum(
        1
        for t in trees
        if t.degree(graph, v) == k_v and t.degree(graph, w) == k_w and (e in t.edges) == in_tree
    )
    return hits / len(trees)


@pytest.mark.parametrize("v, w, k_v, k_w", [(0, 1, 1, 2), (0, 1, 2, 1), (1, 4, 2, 2), (4, 5, 1, 3), (3, 4, 2, 2)])
def test_neighbor_joint_probability(grid3_trees, transfer, v, w, k_v, k_w):
    graph, trees = grid3_trees
    M = transfer(graph)
    split = neighbor_joint_probability(M, v, w, k_v, k_w)
    assert split.in_tree == pytest.approx(_neighbor_brute(graph, trees, v, w, k_v, k_w, True), abs=1e-10)
    assert split.out_of_tree == pytest.approx(_neighbor_brute(graph, trees, v, w, k_v, k_w, False), abs=1e-10)
    both = sum(1 for t in trees if t.degree(graph, v) == k_v and t.degree(graph, w) == k_w) / len(trees)
    assert split.total == pytest.approx(both, abs=1e-10)


def test_neighbor_groups(grid3, transfer):
    M = transfer(grid3)
    groups = neighbor_groups(M, 0, 1, 2, 1, True)
    assert [k for _, k in groups] == [1, 0, 1]
    assert [len(S) for S, _ in groups] == [1, 2, 1]
    with pytest.raises(ValidationError):
        neighbor_groups(M, 0, 1, 0, 1, True)
    with pytest.raises(ValidationError):
        neighbor_groups(M, 0, 8, 1, 1, False)


def test_neighbor_cumulant_single_edge(grid3, transfer):
    M = transfer(grid3)
    # the one-point pieces are the marginals of the three fields
    value = neighbor_cumulant(M, 0, 1, 1, 1, False)
    assert math.isfinite(value)
    e_only = cumulant_from_stars(M, [(((0, 1),), 1)])
    assert e_only == pytest.approx(M.entry((0, 1), (0, 1)))


def test_neighbor_split_serialization():
    split = NeighborSplit(0, 1, 1, 2, 0.1, 0.2)
    data = split.to_dict()
    assert data["total"] == pytest.approx(0.3)
    assert data["in_tree"] == 0.1


def test_cumulant_query_flag(grid3, transfer):
    M = transfer(grid3)
    q = CumulantQuery((0, 1), (2, 1), edge_in_tree=True)
    assert q.targets() == {0: 2, 1: 1}
    assert cumulant_direct(M, q) == pytest.approx(neighbor_cumulant(M, 0, 1, 2, 1, True), abs=1e-14)
    plain = CumulantQuery((0, 8), (1, 1))
    assert cumulant_direct(M, plain) == cumulant_direct(M, DegreeQuery((0, 8), (1, 1)))
    with pytest.raises(ValidationError):
        cumulant_via_moments(M, q)
    with pytest.raises(ValidationError):
        cumulant_direct(M, CumulantQuery((0, 1, 8), (1, 1, 1), edge_in_tree=False))


@pytest.mark.parametrize("k", [0, 1, 2, 4])
def test_subset_bookkeeping(grid3, k):
    star = edge_star(grid3, 4).edges
    counts = subset_multiplicities(star, k)
    assert len(counts) == sum(math.comb(4, s) for s in range(k, 5))
    for E, count in counts.items():
        assert count == math.comb(len(E), k)
    check_bookkeeping(counts, k)


def test_bookkeeping_mismatch_raises(grid3):
    counts = subset_multiplicities(edge_star(grid3, 4).edges, 2)
    E = next(iter(counts))
    counts[E] += 1
    with pytest.raises(RuntimeError):
        check_bookkeeping(counts, 2)


@pytest.mark.slow
@pytest.mark.parametrize("V, k", [((0, 8), (4, 4)), ((0, 8), (3, 4)), ((1, 7), (4, 3))])
def test_permutation_and_partition_paths_agree_on_box(box3, transfer, V, k):
    M = transfer(box3)
    q = CumulantQuery(V, k)
    assert cumulant_direct(M, q, method="permutations") == pytest.approx(cumulant_direct(M, q), abs=1e-10)


def _good_pairs(graph):
    interior = graph.interior
    return [(u, v) for u, v in itertools.combinations(interior, 2) if is_good_set(graph, (u, v))]


@pytest.mark.parametrize("lattice", [TRIANGULAR, HEXAGONAL], ids=lambda l: l.name)
def test_single_point_oracle_on_patches(lattice, transfer):
    graph = build_grid(lattice, Box((4, 4)))
    M = transfer(graph)
    v = graph.interior[5]
    for k in range(1, lattice.degree + 1):
        q = DegreeQuery((v,), (k,))
        assert cumulant_direct(M, q) == pytest.approx(cumulant_via_moments(M, q), abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("lattice", [TRIANGULAR, HEXAGONAL], ids=lambda l: l.name)
def test_two_point_oracle_on_patches(lattice, transfer):
    graph = build_grid(lattice, Box((4, 4)))
    M = transfer(graph)
    pairs = _good_pairs(graph)[::7]
    assert pairs
    for V in pairs:
        for k in itertools.product((1, 2), repeat=2):
            q = DegreeQuery(V, k)
            assert cumulant_direct(M, q) == pytest.approx(cumulant_via_moments(M, q), abs=1e-9), (V, k)


@pytest.mark.slow
def test_two_point_oracle_all_profiles_on_triangular_patch(transfer):
    graph = build_grid(TRIANGULAR, Box((4, 4)))
    M = transfer(graph)
    V = _good_pairs(graph)[0]
    for k in itertools.product(range(1, 7), repeat=2):
        q = DegreeQuery(V, k)
        assert cumulant_direct(M, q) == pytest.approx(cumulant_via_moments(M, q), abs=1e-9), k


@pytest.mark.slow
def test_three_point_oracle_on_grid_diagonal(transfer):
    graph = build_grid(Z2, Box((7, 7)))
    M = transfer(graph)
    V = tuple(vertex_at(graph, (i, i)) for i in (1, 3, 5))
    for k in itertools.product(range(1, 5), repeat=3):
        q = DegreeQuery(V, k)
        assert cumulant_direct(M, q) == pytest.approx(cumulant_via_moments(M, q), abs=1e-9), k


def _neighbor_by_counts(graph, v, w, k_v, k_w, in_tree):
    """Matrix-tree counts over every choice of the other star edges at v and w."""
    e = graph.edge_index((v, w))
    rest_v = [f for f in edge_star(graph, v).edges if graph.edge_index(f) != e]
    rest_w = [f for f in edge_star(graph, w).edges if graph.edge_index(f) != e]
    shared = [(v, w)]
    take_v, take_w = k_v - int(in_tree), k_w - int(in_tree)
    if take_v < 0 or take_w < 0:
        return 0.0
    hits = 0
    for A in itertools.combinations(rest_v, take_v):
        for B in itertools.combinations(rest_w, take_w):
            include = list(A) + list(B) + (shared if in_tree else [])
            exclude = [f for f in rest_v + rest_w if f not in A and f not in B] + ([] if in_tree else shared)
            hits += count_trees(graph, include, exclude)
    return hits / count_trees(graph)


@pytest.mark.parametrize(
    "graph, v, w",
    [(grid_graph(4, 4), 5, 6), (grid_graph(4, 4), 1, 5), (grid_graph(4, 4), 0, 1), (complete_graph(3), 0, 1)],
    ids=["grid4-inner", "grid4-side", "grid4-corner", "k3"],
)
def test_neighbor_split_matches_tree_counts(graph, v, w, transfer):
    M = transfer(graph)
    degrees = [range(1, len(edge_star(graph, u)) + 1) for u in (v, w)]
    for k_v, k_w in itertools.product(*degrees):
        split = neighbor_joint_probability(M, v, w, k_v, k_w)
        assert split.in_tree == pytest.approx(_neighbor_by_counts(graph, v, w, k_v, k_w, True), abs=1e-10)
        assert split.out_of_tree == pytest.approx(_neighbor_by_counts(graph, v, w, k_v, k_w, False), abs=1e-10)


def test_neighbor_split_on_triangle(transfer):
    split = neighbor_joint_probability(transfer(complete_graph(3)), 0, 1, 2, 2)
    # both endpoints of a triangle edge at degree 2 would close the cycle
    assert split.total == pytest.approx(0.0, abs=1e-12)
