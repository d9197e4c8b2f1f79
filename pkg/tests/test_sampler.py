import numpy as np
import pytest

import config
from degrees import DegreeQuery
from errors import GuardExceeded, ValidationError
from graphs import build_grid, complete_graph, edge_star, grid_graph
from green import laplacian
from lattices import Box, Z2
from sampler import (
    SampleStats,
    chi_square_uniform,
    count_probability,
    count_trees,
    enumerate_trees,
    exact_probability,
    make_rng,
    mc_estimate,
    query_predicate,
    wilson_sample,
)
from transfer import EdgeProbQuery, edge_probability


@pytest.mark.parametrize("n, expected", [(3, 3), (4, 16), (5, 125), (6, 1296)])
def test_cayley(n, expected):
    assert count_trees(complete_graph(n)) == expected


def test_grid_counts(grid3):
    assert count_trees(grid3) == 192


def test_wired_count_is_dirichlet_determinant():
    graph = build_grid(Z2, Box((2, 2)))
    A = -laplacian(graph)[np.ix_(graph.interior, graph.interior)]
    assert count_trees(graph) == round(np.linalg.det(A)) == 192


def test_enumeration_matches_count(small_graph):
    trees = list(enumerate_trees(small_graph))
    assert len(trees) == count_trees(small_graph)
    assert len({t.edges for t in trees}) == len(trees)
    assert all(len(t) == small_graph.tree_size() for t in trees)


def test_enumeration_guard(grid3):
    with pytest.raises(GuardExceeded):
        list(enumerate_trees(grid3, max_trees=100))


def test_include_exclude(k4):
    assert count_trees(k4, include=[(0, 1)]) == 8
    assert count_trees(k4, exclude=[(0, 1)]) == 8
    assert count_trees(k4, include=[(0, 1), (1, 2), (0, 2)]) == 0
    assert count_trees(k4, include=[(0, 1)], exclude=[(1, 0)]) == 0


def test_wilson_is_deterministic(box3):
    a = wilson_sample(box3, 7)
    b = wilson_sample(box3, 7)
    assert a == b
    assert len(a) == box3.tree_size()


def test_wilson_is_uniform_on_k4(k4):
    assert chi_square_uniform(k4, 4000, seed=11) > 1e-3


def test_streams_are_independent():
    a = make_rng(5, 0).random(4)
    b = make_rng(5, 1).random(4)
    assert not np.allclose(a, b)
    assert np.allclose(a, make_rng(5, 0).random(4))


def test_mc_estimate_matches_exact(box3, transfer):
    M = transfer(box3)
    star = edge_star(box3, 4).edges
    q = EdgeProbQuery(F=star[:1], G=star[1:2])
    exact = edge_probability(M, q)
    stats = mc_estimate(box3, q, samples=4000, seed=3)
    assert stats.samples == 4000
    assert stats.sigmas(exact) < 5.0


def test_mc_estimate_ignores_thread_count(k4):
    q = EdgeProbQuery(F=[(0, 1)])
    one = mc_estimate(k4, q, samples=999, seed=2, threads=1)
    many = mc_estimate(k4, q, samples=999, seed=2, threads=4)
    assert one == many


def test_degree_query_predicate(k4):
    holds = query_predicate(k4, DegreeQuery((0,), (3,)))
    star_trees = [t for t in enumerate_trees(k4) if holds(t)]
    assert len(star_trees) == 1
    assert exact_probability(k4, DegreeQuery((0,), (1,))) == pytest.approx(9 / 16)


def test_exact_probability_agrees_with_counts(small_graph):
    e = small_graph.edges[0]
    assert exact_probability(small_graph, EdgeProbQuery(F=[e])) == pytest.approx(count_probability(small_graph, [e]))


def test_bad_query(k4):
    with pytest.raises(ValidationError):
        query_predicate(k4, 42)
    with pytest.raises(ValidationError):
        mc_estimate(k4, EdgeProbQuery(F=[(0, 1)]), samples=0)


def test_sample_stats():
    s = SampleStats(100, 25).merge(SampleStats(100, 25))
    assert s.estimate == 0.25
    assert s.se == pytest.approx(np.sqrt(0.25 * 0.75 / 200))
    assert SampleStats(10, 10).sigmas(1.0) == 0.0
    assert SampleStats(10, 10).sigmas(0.5) == float("inf")
    assert s.to_dict()["estimate"] == 0.25


@pytest.mark.slow
@pytest.mark.parametrize(
    "graph, q",
    [
        (complete_graph(5), DegreeQuery((0,), (2,))),
        (complete_graph(5), EdgeProbQuery(F=[(0, 1), (2, 3)])),
        (grid_graph(5, 5), DegreeQuery((6, 18), (2, 2))),
        (grid_graph(5, 5), EdgeProbQuery(F=[(12, 13)], G=[(12, 7)])),
    ],
    ids=["k5-degree", "k5-edges", "grid5-joint-degree", "grid5-edges"],
)
def test_mc_agrees_with_determinants(graph, q):
    from degrees import degree_probability
    from green import green_for
    from transfer import transfer_matrix

    M = transfer_matrix(green_for(graph))
    exact = degree_probability(M, q) if isinstance(q, DegreeQuery) else edge_probability(M, q)
    hits = [mc_estimate(graph, q, samples=config.SAMPLES, seed=seed, threads=2).sigmas(exact) < 4.0 for seed in (11, 12, 13)]
    assert sum(hits) >= 2
