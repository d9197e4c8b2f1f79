import math

import numpy as np
import pytest

from errors import ValidationError
from lattices import HEXAGONAL, TRIANGULAR, Ball, Box, Z2, hypercubic, lattice_by_name, region_from_dict


@pytest.mark.parametrize("lattice", [Z2, TRIANGULAR, HEXAGONAL], ids=lambda l: l.name)
def test_edge_vectors_are_unit_and_balanced(lattice):
    for s in (0, 1) if lattice.kind == "hexagonal" else (0,):
        vectors = lattice.edge_vectors(s)
        assert len(vectors) == lattice.degree
        for v in vectors:
            assert np.linalg.norm(v) == pytest.approx(1.0)
        assert np.allclose(sum(vectors), 0.0)


@pytest.mark.parametrize("lattice", [Z2, TRIANGULAR, HEXAGONAL], ids=lambda l: l.name)
def test_directions_are_counterclockwise(lattice):
    vectors = lattice.edge_vectors(0)
    for alpha in range(lattice.degree):
        cos = float(vectors[0] @ vectors[alpha])
        assert cos == pytest.approx(float(lattice.gamma_of(alpha)))


def test_neighbors_round_trip():
    for lattice in (Z2, TRIANGULAR, HEXAGONAL):
        p = lattice.origin()
        for _, q in lattice.neighbors(p):
            assert p in [r for _, r in lattice.neighbors(q)]


def test_rotation_and_opposite():
    assert Z2.rotate(3, 2) == 1
    assert Z2.opposite(0) == 2
    assert TRIANGULAR.opposite(1) == 4
    assert HEXAGONAL.opposite(0) is None
    assert HEXAGONAL.rotate(2, 1) == 0


def test_triangular_position():
    assert np.allclose(TRIANGULAR.position((0, 1)), [0.5, math.sqrt(3) / 2])


def test_lattice_lookup():
    assert lattice_by_name("Z2") is Z2
    assert lattice_by_name("Z3").degree == 6
    assert lattice_by_name("hex").p == 3
    with pytest.raises(ValidationError):
        lattice_by_name("kagome")
    with pytest.raises(ValidationError):
        hypercubic(0)


def test_regions():
    assert len(Box((3, 2)).points(Z2)) == 6
    assert len(Box((2, 2)).points(HEXAGONAL)) == 8
    assert len(Ball(1.5).points(Z2)) == 9
    assert len(Ball(1.01).points(TRIANGULAR)) == 7
    assert region_from_dict({"width": 4, "height": 2}) == Box((4, 2))
    assert region_from_dict({"radius": 3}) == Ball(3.0)
    with pytest.raises(ValidationError):
        region_from_dict({"side": 2})
