import math

import numpy as np
import pytest

from degrees import degree_pmf_joint, degree_pmf_single, DegreeQuery
from errors import GuardExceeded, ValidationError
from graphs import build_grid, edge_star
from grassmann import (
    FermionicGFF,
    GrassmannAlgebra,
    berezin,
    degree_field_expectation,
    degree_field_x,
    degree_field_y,
    fermionic_moment,
    fermionic_power_moment,
    fgff_expectation,
    gaussian_weight,
    gmul,
    product,
    wick_check,
    wick_check_bc,
    zeta,
)
from lattices import Box, Z2
from transfer import EdgeProbQuery, edge_probability


@pytest.fixture(scope="module")
def box2():
    return build_grid(Z2, Box((2, 2)))


def test_generators_anticommute():
    alg = GrassmannAlgebra(2)
    a, b = alg.psi(0), alg.psibar(1)
    assert gmul(a, b) == -gmul(b, a)
    assert gmul(a, a) == alg.scalar(0.0)
    assert (a + b) ** 2 == alg.scalar(0.0)


def test_pairs_commute():
    alg = GrassmannAlgebra(3)
    p = gmul(alg.psi(0), alg.psibar(2))
    q = gmul(alg.psi(1), alg.psibar(0))
    assert gmul(p, q) == gmul(q, p)


def test_berezin_picks_top_coefficient():
    alg = GrassmannAlgebra(1)
    F = 2.0 + 3.0 * gmul(alg.psi(0), alg.psibar(0))
    assert berezin(F) == 3.0
    assert berezin(gmul(alg.psibar(0), alg.psi(0))) == -1.0


def test_gaussian_integral_is_determinant(rng):
    for m in (1, 2, 3, 4):
        A = rng.standard_normal((m, m))
        assert berezin(gaussian_weight(A)) == pytest.approx(np.linalg.det(A), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("I, J", [([0], [0]), ([1], [2]), ([0, 2], [1, 0]), ([0, 1, 3], [3, 2, 1]), ([], [])])
def test_wick(I, J, rng):
    A = 4 * np.eye(4) + rng.standard_normal((4, 4))
    lhs, rhs = wick_check(A, I, J)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


def test_wick_unbalanced_is_zero(rng):
    A = 3 * np.eye(3) + rng.standard_normal((3, 3))
    lhs, rhs = wick_check(A, [0, 1], [2])
    assert rhs == 0.0
    assert lhs == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_wick_bilinear(r, rng):
    A = 3 * np.eye(3) + rng.standard_normal((3, 3))
    lhs, rhs = wick_check_bc(A, rng.standard_normal((r, 3)), rng.standard_normal((3, r)))
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


def test_guards():
    with pytest.raises(GuardExceeded):
        GrassmannAlgebra(15)
    with pytest.raises(GuardExceeded):
        wick_check(np.eye(7), [0], [0])
    with pytest.raises(ValidationError):
        wick_check_bc(np.eye(3), np.ones((2, 2)), np.ones((3, 2)))
    with pytest.raises(ValidationError):
        GrassmannAlgebra(2).psi(0) + GrassmannAlgebra(3).psi(0)


def test_fgff_needs_boundary(k4):
    with pytest.raises(ValidationError):
        FermionicGFF(k4)


def test_zeta_gives_edge_probability(box2, transfer):
    M = transfer(box2)
    for e in box2.edges:
        assert fgff_expectation(box2, zeta(box2, e)) == pytest.approx(M.entry(e, e), abs=1e-10)


def test_fermionic_yes_no_events(box2, transfer):
    M = transfer(box2)
    star = edge_star(box2, 0).edges
    state_alg = zeta(box2, star[0]).algebra
    F = product([zeta(box2, star[0]), 1.0 - zeta(box2, star[1]), zeta(box2, star[2])], state_alg)
    q = EdgeProbQuery(F=[star[0], star[2]], G=[star[1]])
    assert fgff_expectation(box2, F) == pytest.approx(edge_probability(M, q), abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_degree_fields(box2, transfer, k):
    M = transfer(box2)
    assert degree_field_expectation(box2, {0: k}) == pytest.approx(degree_pmf_single(M, 0, k), abs=1e-10)


def test_joint_degree_fields(box2, transfer):
    M = transfer(box2)
    # (0,0) and (1,1) are not neighbors
    q = DegreeQuery((0, 3), (2, 2))
    assert degree_field_expectation(box2, {0: 2, 3: 2}) == pytest.approx(degree_pmf_joint(M, q), abs=1e-10)


def test_fields_are_consistent(box2):
    x = degree_field_x(box2, 0, 1)
    y = degree_field_y(box2, 0)
    total = sum((degree_field_expectation(box2, {0: k}) for k in range(1, 5)), 0.0)
    assert total == pytest.approx(1.0, abs=1e-10)
    assert fgff_expectation(box2, gmul(x, y)) == pytest.approx(degree_field_expectation(box2, {0: 1}))


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_power_moments(box2, transfer, m):
    M = transfer(box2)
    assert fermionic_power_moment(box2, 0, m) == pytest.approx(fermionic_moment(M, 0, m), abs=1e-10)
    if m == 1:
        expected = math.fsum(M.entry(e, e) for e in edge_star(box2, 0).edges)
        assert fermionic_moment(M, 0, 1) == pytest.approx(expected)
