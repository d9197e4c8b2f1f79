"""Lattice geometry: Z^d, triangular and hexagonal lattices, and region descriptors.

Points are integer coordinate tuples in the lattice's own basis:

- hypercubic Z^d: Cartesian integer coordinates
- triangular: (m, n) over b1 = (1, 0), b2 = (1/2, sqrt(3)/2)
- hexagonal: (m, n, s) where (m, n) is a cell over t1 = (3/2, sqrt(3)/2),
  t2 = (0, sqrt(3)) and s is the sublattice (0 = type A at the cell corner,
  1 = type B at the corner + (1, 0))

Edge directions at a point are listed counterclockwise starting from the
direction closest to angle 0, so direction index alpha sits at angle
2*pi*alpha/p relative to direction 0.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from errors import ValidationError

SQRT3 = math.sqrt(3.0)

Point = tuple


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and constants of a lattice."""
    kind: str  # "hypercubic", "triangular" or "hexagonal"
    name: str
    d: int
    degree: int
    p: int
    c_L: Fraction
    gamma: tuple
    steps: tuple  # coordinate deltas, direction order (type A for hexagonal)
    steps_b: Optional[tuple] = None  # hexagonal type B

    @property
    def planar(self) -> bool:
        return self.d == 2

    def origin(self) -> Point:
        return (0, 0, 0) if self.kind == "hexagonal" else (0,) * self.d

    def sublattice(self, point: Point) -> int:
        return point[2] if self.kind == "hexagonal" else 0

    def steps_at(self, point: Point) -> tuple:
        if self.kind == "hexagonal" and point[2] == 1:
            return self.steps_b
        return self.steps

    def neighbors(self, point: Point) -> list:
        """(direction index, neighbor point) pairs in direction order."""
        return [
            (i, tuple(a + b for a, b in zip(point, step)))
            for i, step in enumerate(self.steps_at(point))
        ]

    def is_natural(self, point: Point, direction: int) -> bool:
        """Whether the edge leaving `point` in `direction` has `point` as its natural tail."""
        if self.kind == "hexagonal":
            return point[2] == 0
        return direction < self.degree // 2

    def position(self, point: Point) -> np.ndarray:
        """Cartesian position of a lattice point."""
        if self.kind == "hypercubic":
            return np.asarray(point, dtype=float)
        if self.kind == "triangular":
            m, n = point
            return np.array([m + 0.5 * n, 0.5 * SQRT3 * n])
        m, n, s = point
        return np.array([1.5 * m + s, 0.5 * SQRT3 * m + SQRT3 * n])

    def edge_vector(self, point: Point, direction: int) -> np.ndarray:
        step = self.steps_at(point)[direction]
        target = tuple(a + b for a, b in zip(point, step))
        return self.position(target) - self.position(point)

    def edge_vectors(self, sublattice: int = 0) -> list:
        """Unit edge vectors e_1..e_deg at a point of the given sublattice."""
        point = (0, 0, sublattice) if self.kind == "hexagonal" else self.origin()
        return [self.edge_vector(point, i) for i in range(self.degree)]

    def gamma_of(self, alpha: int) -> Fraction:
        """cos(2*pi*alpha/p) as an exact rational."""
        return self.gamma[alpha % self.p]

    def opposite(self, direction: int) -> Optional[int]:
        """Direction index of -e_direction, None where the star is not closed under negation."""
        if self.kind == "hexagonal":
            return None
        return (direction + self.degree // 2) % self.degree

    def rotate(self, direction: int, turns: int) -> int:
        """Direction index after `turns` elementary rotations of the star."""
        return (direction + turns) % self.degree


def hypercubic(d: int) -> LatticeSpec:
    """Z^d with e_{d+i} = -e_i."""
    if d < 1:
        raise ValidationError("dimension must be at least 1")
    units = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
    steps = tuple(units + [tuple(-x for x in u) for u in units])
    if d == 1:
        gamma = (Fraction(1), Fraction(-1))
        p = 2
    else:
        gamma = (Fraction(1), Fraction(0), Fraction(-1), Fraction(0))
        p = 4
    return LatticeSpec(
        kind="hypercubic",
        name=f"Z{d}",
        d=d,
        degree=2 * d,
        p=p,
        c_L=Fraction(2),
        gamma=gamma,
        steps=steps,
    )


TRIANGULAR = LatticeSpec(
    kind="triangular",
    name="tri",
    d=2,
    degree=6,
    p=6,
    c_L=Fraction(3),
    gamma=(Fraction(1), Fraction(1, 2), Fraction(-1, 2), Fraction(-1), Fraction(-1, 2), Fraction(1, 2)),
    steps=((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)),
)

HEXAGONAL = LatticeSpec(
    kind="hexagonal",
    name="hex",
    d=2,
    degree=3,
    p=3,
    c_L=Fraction(3, 2),
    gamma=(Fraction(1), Fraction(-1, 2), Fraction(-1, 2)),
    # type A: 0, 2pi/3, 4pi/3
    steps=((0, 0, 1), (-1, 1, 1), (-1, 0, 1)),
    # type B: pi/3, pi, 5pi/3
    steps_b=((1, 0, -1), (0, 0, -1), (1, -1, -1)),
)

Z2 = hypercubic(2)

_NAMED = {"Z2": Z2, "tri": TRIANGULAR, "hex": HEXAGONAL}


def lattice_by_name(name: str) -> LatticeSpec:
    """Look up a lattice by CLI name: Z1, Z2, Z3, ..., tri, hex."""
    if name in _NAMED:
        return _NAMED[name]
    if name.startswith("Z") and name[1:].isdigit():
        return hypercubic(int(name[1:]))
    raise ValidationError(f"unknown lattice: {name!r} (expected Z2, tri, hex or Zd)")


@dataclass(frozen=True)
class Box:
    """Coordinate box: [0, W) x [0, H) x ... in the lattice's own coordinates.

    For the hexagonal lattice each cell contributes both of its sublattice points.
    """
    shape: tuple

    def points(self, lattice: LatticeSpec) -> set:
        if any(s < 1 for s in self.shape):
            return set()
        if lattice.kind == "hypercubic":
            if len(self.shape) != lattice.d:
                raise ValidationError(f"box of rank {len(self.shape)} on {lattice.name}")
            return set(itertools.product(*(range(s) for s in self.shape)))
        if len(self.shape) != 2:
            raise ValidationError(f"planar box needs (width, height), got {self.shape}")
        cells = itertools.product(range(self.shape[0]), range(self.shape[1]))
        if lattice.kind == "triangular":
            return set(cells)
        return {(m, n, s) for m, n in cells for s in (0, 1)}


@dataclass(frozen=True)
class Ball:
    """Open Euclidean ball |x - center| < radius, intersected with the lattice."""
    radius: float
    center: Optional[tuple] = None

    def points(self, lattice: LatticeSpec) -> set:
        center = np.zeros(lattice.d) if self.center is None else np.asarray(self.center, dtype=float)
        reach = self.radius + float(np.linalg.norm(center))
        if lattice.kind == "hypercubic":
            k = int(math.ceil(reach)) + 1
            candidates = itertools.product(range(-k, k + 1), repeat=lattice.d)
        else:
            k = int(math.ceil(2.0 * reach / SQRT3)) + 2
            cells = list(itertools.product(range(-k, k + 1), repeat=2))
            if lattice.kind == "triangular":
                candidates = cells
            else:
                candidates = [(m, n, s) for m, n in cells for s in (0, 1)]
        return {
            p for p in candidates
            if np.linalg.norm(lattice.position(p) - center) < self.radius
        }


def region_from_dict(data: dict):
    """Region descriptor from its JSON form."""
    if "radius" in data:
        return Ball(float(data["radius"]), tuple(data["center"]) if data.get("center") else None)
    if "shape" in data:
        return Box(tuple(int(s) for s in data["shape"]))
    if "width" in data and "height" in data:
        shape = (int(data["width"]), int(data["height"]))
        if "depth" in data:
            shape += (int(data["depth"]),)
        return Box(shape)
    raise ValidationError(f"cannot read region descriptor: {data}")
