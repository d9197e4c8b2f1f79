import math

import numpy as np
import pytest

from errors import ValidationError
from graphs import complete_graph
from green import (
    get_kernel,
    green_dirichlet,
    green_for,
    green_grounded,
    green_infinite,
    laplacian,
    origin_star_matrix,
    potential_kernel,
)
from lattices import TRIANGULAR, Z2, hypercubic


def test_laplacian_rows_sum_to_zero(small_graph):
    L = laplacian(small_graph)
    assert np.allclose(L.sum(axis=1), 0.0)
    assert np.allclose(L, L.T)


def test_green_inverts_laplacian(small_graph):
    G = green_for(small_graph)
    assert G.residual() < 1e-10
    assert np.allclose(G.table, G.table.T)


def test_green_mode_follows_boundary(box3, k4):
    assert green_for(box3).mode == "dirichlet"
    G = green_for(k4)
    assert G.mode == "grounded"
    assert G.root == 0
    assert G(0, 2) == 0.0


def test_green_vanishes_on_boundary(box3):
    G = green_dirichlet(box3)
    for b in box3.boundary:
        assert np.all(G.table[b] == 0.0)


def test_green_errors(k4):
    with pytest.raises(ValidationError):
        green_dirichlet(k4)
    with pytest.raises(ValidationError):
        green_grounded(k4, 9)


def test_z2_potential_kernel():
    assert potential_kernel(Z2, (0, 0)) == 0.0
    assert potential_kernel(Z2, (1, 0)) == pytest.approx(1.0, abs=1e-8)
    assert potential_kernel(Z2, (1, 1)) == pytest.approx(4 / math.pi, abs=1e-8)
    assert potential_kernel(Z2, (0, -2)) == pytest.approx(potential_kernel(Z2, (2, 0)))


def test_triangular_potential_kernel_is_one_at_neighbors():
    for _, q in TRIANGULAR.neighbors((0, 0)):
        assert potential_kernel(TRIANGULAR, q) == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("u", [(2, 1), (3, 0), (1, 1)])
def test_potential_kernel_is_harmonic_away_from_origin(u):
    assert get_kernel(Z2).laplacian_at(u) == pytest.approx(0.0, abs=1e-7)


def test_green_infinite_and_star_matrix():
    assert green_infinite(Z2, (0, 0), (1, 0)) == pytest.approx(-0.25, abs=1e-8)
    M = origin_star_matrix(Z2)
    assert np.allclose(M, M.T)
    # each star edge is in the infinite-volume tree with probability 1/2
    assert np.allclose(np.diag(M), 0.5, atol=1e-8)
    # outgoing star edges: the row sums are (-Delta G)(o, o) = 1
    assert np.allclose(M.sum(axis=1), 1.0, atol=1e-8)


def test_kernel_needs_planar_lattice():
    with pytest.raises(ValidationError):
        potential_kernel(hypercubic(3), (1, 0, 0))


def test_single_site_dirichlet():
    from graphs import build_grid
    from lattices import Ball, Box

    square = build_grid(Z2, Box((1, 1)))
    assert square.n == 5
    assert green_dirichlet(square)(0, 0) == pytest.approx(0.25)
    hexagon = build_grid(TRIANGULAR, Ball(0.5))
    assert green_dirichlet(hexagon)(0, 0) == pytest.approx(1 / 6)


def test_small_hand_inverses():
    from graphs import build_grid
    from lattices import Box

    segment = build_grid(hypercubic(1), Box((2,)))
    G = green_dirichlet(segment)
    assert G(0, 0) == pytest.approx(2 / 3)
    assert G(0, 1) == pytest.approx(1 / 3)
    G = green_grounded(complete_graph(3), 2)
    assert G(0, 0) == pytest.approx(2 / 3)
    assert G(0, 1) == pytest.approx(1 / 3)
