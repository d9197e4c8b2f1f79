"""Finite Grassmann algebra, Berezin integration and the fermionic Gaussian free field.

This is the slow exact oracle for fermionic expectations. Generators are
psi_i -> 2i and psibar_i -> 2i+1; an element is a map from generator
bitmasks (monomials in ascending generator order) to real coefficients.
"""

import functools
import itertools
import logging
from typing import Iterable, Sequence

import numpy as np

import config
from errors import GuardExceeded, ValidationError
from graphs import FiniteGraph, edge_star

logger = logging.getLogger(__name__)


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _merge_sign(a: int, b: int) -> int:
    """Sign of sorting monomial a followed by monomial b (disjoint masks)."""
    swaps = 0
    rest = b
    while rest:
        low = rest & -rest
        swaps += _popcount(a & ~((low << 1) - 1))
        rest ^= low
    return -1 if swaps & 1 else 1


class GrassmannAlgebra:
    """The algebra generated by psi_1..psi_m, psibar_1..psibar_m."""

    def __init__(self, m: int):
        if m < 0:
            raise ValidationError("number of generator pairs must be non-negative")
        if m > config.MAX_GRASSMANN_PAIRS:
            raise GuardExceeded("Grassmann generator pairs", m, config.MAX_GRASSMANN_PAIRS)
        self.m = m
        self.top = (1 << (2 * m)) - 1

    def __eq__(self, other):
        return isinstance(other, GrassmannAlgebra) and other.m == self.m

    def __hash__(self):
        return hash(("GrassmannAlgebra", self.m))

    def element(self, coeffs: dict) -> "GrassmannElement":
        return GrassmannElement(self, coeffs)

    def scalar(self, c: float) -> "GrassmannElement":
        return GrassmannElement(self, {0: float(c)} if c else {})

    def one(self) -> "GrassmannElement":
        return self.scalar(1.0)

    def generator(self, k: int) -> "GrassmannElement":
        if not 0 <= k < 2 * self.m:
            raise ValidationError(f"generator {k} out of range for m = {self.m}")
        return GrassmannElement(self, {1 << k: 1.0})

    def psi(self, i: int) -> "GrassmannElement":
        return self.generator(2 * i)

    def psibar(self, i: int) -> "GrassmannElement":
        return self.generator(2 * i + 1)


class GrassmannElement:
    """A multilinear form over the generators of an algebra."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: GrassmannAlgebra, coeffs: dict):
        self.algebra = algebra
        self.coeffs = {mask: c for mask, c in coeffs.items() if c != 0.0}

    def __add__(self, other):
        if not isinstance(other, GrassmannElement):
            other = self.algebra.scalar(other)
        _check_same(self, other)
        out = dict(self.coeffs)
        for mask, c in other.coeffs.items():
            out[mask] = out.get(mask, 0.0) + c
        return GrassmannElement(self.algebra, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement(self.algebra, {mask: -c for mask, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GrassmannElement):
            return gmul(self, other)
        return GrassmannElement(self.algebra, {mask: c * other for mask, c in self.coeffs.items()})

    def __rmul__(self, other):
        return GrassmannElement(self.algebra, {mask: other * c for mask, c in self.coeffs.items()})

    def __pow__(self, k: int):
        if k < 0:
            raise ValidationError("negative power of a Grassmann element")
        out = self.algebra.one()
        for _ in range(k):
            out = gmul(out, self)
        return out

    def coefficient(self, mask: int) -> float:
        return self.coeffs.get(mask, 0.0)

    def isclose(self, other: "GrassmannElement", tol: float = 0.0) -> bool:
        _check_same(self, other)
        masks = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= tol for k in masks)

    def __eq__(self, other):
        return isinstance(other, GrassmannElement) and self.algebra == other.algebra and self.isclose(other)

    def __repr__(self):
        return f"GrassmannElement(m={self.algebra.m}, terms={len(self.coeffs)})"


def _check_same(a: GrassmannElement, b: GrassmannElement):
    if a.algebra != b.algebra:
        raise ValidationError(f"algebra mismatch: m={a.algebra.m} vs m={b.algebra.m}")


def gmul(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    """Product with the sorting-parity sign; overlapping monomials vanish."""
    _check_same(a, b)
    out: dict = {}
    for ma, ca in a.coeffs.items():
        for mb, cb in b.coeffs.items():
            if ma & mb:
                continue
            mask = ma | mb
            out[mask] = out.get(mask, 0.0) + _merge_sign(ma, mb) * ca * cb
    return GrassmannElement(a.algebra, out)


def product(factors: Iterable[GrassmannElement], algebra: GrassmannAlgebra) -> GrassmannElement:
    out = algebra.one()
    for f in factors:
        out = gmul(out, f)
    return out


def berezin(F: GrassmannElement) -> float:
    """Derivatives d_{xi_M} ... d_{xi_1} applied to F: the ascending top coefficient."""
    return F.coefficient(F.algebra.top)


def gaussian_weight(A: np.ndarray) -> GrassmannElement:
    """exp(<psi, A psibar>) as the finite product of (1 + A_ij psi_i psibar_j)."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    algebra = GrassmannAlgebra(m)
    weight = algebra.one()
    for i in range(m):
        for j in range(m):
            if A[i, j] != 0.0:
                pair = gmul(algebra.psi(i), algebra.psibar(j))
                weight = weight + A[i, j] * gmul(weight, pair)
    return weight


# Wick's theorem


def wick_check(A: np.ndarray, I: Sequence[int], J: Sequence[int]) -> tuple:
    """(Berezin integral of prod psi_I psibar_J exp(<psi, A psibar>), det(A) det(A^-T)_IJ)."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if m > 6:
        raise GuardExceeded("Wick check matrix size", m, 6)
    algebra = GrassmannAlgebra(m)
    F = product((gmul(algebra.psi(i), algebra.psibar(j)) for i, j in zip(I, J)), algebra)
    if len(I) != len(J):
        extra = [algebra.psi(i) for i in I[len(J):]] + [algebra.psibar(j) for j in J[len(I):]]
        F = product([F] + extra, algebra)
        return berezin(gmul(F, gaussian_weight(A))), 0.0
    lhs = berezin(gmul(F, gaussian_weight(A)))
    if not I:
        return lhs, float(np.linalg.det(A))
    inv_t = np.linalg.inv(A).T
    rhs = float(np.linalg.det(A) * np.linalg.det(inv_t[np.ix_(list(I), list(J))]))
    return lhs, rhs


def wick_check_bc(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> tuple:
    """(Berezin integral of prod_a (psi^T C)_a (B psibar)_a exp(<psi, A psibar>), det(A) det(B A^-1 C))."""
    A, B, C = (np.asarray(x, dtype=float) for x in (A, B, C))
    m = A.shape[0]
    r = B.shape[0]
    if B.shape != (r, m) or C.shape != (m, r):
        raise ValidationError(f"B must be r x m and C m x r, got {B.shape} and {C.shape}")
    algebra = GrassmannAlgebra(m)
    factors = []
    for a in range(r):
        left = sum((C[i, a] * algebra.psi(i) for i in range(m)), algebra.scalar(0.0))
        right = sum((B[a, j] * algebra.psibar(j) for j in range(m)), algebra.scalar(0.0))
        factors.append(gmul(left, right))
    lhs = berezin(gmul(product(factors, algebra), gaussian_weight(A)))
    rhs = float(np.linalg.det(A) * np.linalg.det(B @ np.linalg.inv(A) @ C))
    return lhs, rhs


# Fermionic Gaussian free field on a graph


class FermionicGFF:
    """The state <F> = Berezin(exp(<psi, -Delta psibar>) F) / det(-Delta) on a graph's interior."""

    def __init__(self, graph: FiniteGraph):
        from green import laplacian

        if not graph.boundary:
            raise ValidationError("fermionic GFF needs a Dirichlet boundary (-Delta is singular otherwise)")
        self.graph = graph
        self.sites = graph.interior
        self.index = {v: i for i, v in enumerate(self.sites)}
        self.algebra = GrassmannAlgebra(len(self.sites))
        A = -laplacian(graph)[np.ix_(self.sites, self.sites)]
        self.det = float(np.linalg.det(A))
        logger.debug("expanding Gaussian weight on %d sites", len(self.sites))
        self.weight = gaussian_weight(A)

    def psi(self, v: int) -> GrassmannElement:
        if v not in self.index:
            return self.algebra.scalar(0.0)
        return self.algebra.psi(self.index[v])

    def psibar(self, v: int) -> GrassmannElement:
        if v not in self.index:
            return self.algebra.scalar(0.0)
        return self.algebra.psibar(self.index[v])

    def zeta(self, e) -> GrassmannElement:
        """(psi(e+) - psi(e-)) (psibar(e+) - psibar(e-)), boundary generators set to 0."""
        tail, tip = e
        self.graph.edge_index(e)
        return gmul(self.psi(tip) - self.psi(tail), self.psibar(tip) - self.psibar(tail))

    def x_field(self, v: int, k: int) -> GrassmannElement:
        """Sum over k-subsets S of the star E_v of prod zeta(S)."""
        star = edge_star(self.graph, v)
        zetas = [self.zeta(f) for f in star]
        total = self.algebra.scalar(0.0)
        for subset in itertools.combinations(zetas, k):
            total = total + product(subset, self.algebra)
        return total

    def y_field(self, v: int) -> GrassmannElement:
        """prod over the star of (1 - zeta(f))."""
        star = edge_star(self.graph, v)
        return product((1.0 - self.zeta(f) for f in star), self.algebra)

    def expectation(self, F: GrassmannElement) -> float:
        _check_same(F, self.weight)
        return berezin(gmul(self.weight, F)) / self.det


@functools.lru_cache(maxsize=16)
def fgff_state(graph: FiniteGraph) -> FermionicGFF:
    return FermionicGFF(graph)


def fgff_expectation(graph: FiniteGraph, F: GrassmannElement) -> float:
    """Normalized Berezin integral of F against the Gaussian weight of -Delta."""
    return fgff_state(graph).expectation(F)


def zeta(graph: FiniteGraph, e) -> GrassmannElement:
    return fgff_state(graph).zeta(e)


def degree_field_x(graph: FiniteGraph, v: int, k: int) -> GrassmannElement:
    return fgff_state(graph).x_field(v, k)


def degree_field_y(graph: FiniteGraph, v: int) -> GrassmannElement:
    return fgff_state(graph).y_field(v)


def degree_field_expectation(graph: FiniteGraph, ks: dict) -> float:
    """<prod_v X_v^{k_v} Y_v>."""
    state = fgff_state(graph)
    factors = []
    for v, k in ks.items():
        factors.append(gmul(state.x_field(v, k), state.y_field(v)))
    return state.expectation(product(factors, state.algebra))


def fermionic_power_moment(graph: FiniteGraph, v: int, m: int) -> float:
    """<(sum over the star of zeta)^m> computed in the algebra."""
    state = fgff_state(graph)
    return state.expectation(state.x_field(v, 1) ** m)


def fermionic_moment(M, v: int, m: int) -> float:
    """The same moment from minors: m! sum over m-subsets S of the star of det(M)_S."""
    from degrees import factorial_moment

    return factorial_moment(M, v, m)


if __name__ == "__main__":
    rng = np.random.default_rng(0)
    A = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
    print("Wick part 1, I = J = {0}:", wick_check(A, [0], [0]))
    print("Wick part 1, I = {0, 2}, J = {1, 0}:", wick_check(A, [0, 2], [1, 0]))
    print("|I| != |J|:", wick_check(A, [0, 1], [2]))
