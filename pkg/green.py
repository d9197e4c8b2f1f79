"""Discrete Laplacian, Green's functions and the planar potential kernel."""

import logging
import math
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, linalg

import config
from errors import ValidationError
from graphs import FiniteGraph
from lattices import HEXAGONAL, LatticeSpec

logger = logging.getLogger(__name__)


def laplacian(graph: FiniteGraph) -> np.ndarray:
    """Unnormalized Laplacian: -deg(v) on the diagonal, 1 for each neighbor."""
    L = np.zeros((graph.n, graph.n))
    for e in graph.edges:
        L[e.tail, e.tip] = 1.0
        L[e.tip, e.tail] = 1.0
    L[np.diag_indices(graph.n)] = -L.sum(axis=1)
    return L


@dataclass(frozen=True)
class GreenFunction:
    """G on the whole vertex set, zero on the boundary (dirichlet) or at the root (grounded)."""
    graph: FiniteGraph
    mode: str  # "dirichlet" or "grounded"
    table: np.ndarray
    root: Optional[int] = None

    def __call__(self, u: int, v: int) -> float:
        return float(self.table[u, v])

    @property
    def domain(self) -> tuple:
        if self.mode == "dirichlet":
            return self.graph.interior
        return tuple(v for v in self.graph.vertices if v != self.root)

    def residual(self) -> float:
        """max |(-Delta) G - I| over the domain."""
        idx = list(self.domain)
        A = -laplacian(self.graph)[np.ix_(idx, idx)]
        return float(np.abs(A @ self.table[np.ix_(idx, idx)] - np.eye(len(idx))).max())


def _invert_spd(A: np.ndarray) -> np.ndarray:
    try:
        factor = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError:
        raise ValidationError("restricted Laplacian is singular; some component has no boundary")
    return linalg.cho_solve(factor, np.eye(A.shape[0]))


def green_dirichlet(graph: FiniteGraph) -> GreenFunction:
    """G = (-Delta restricted to the interior)^-1, extended by 0 on the boundary."""
    if not graph.boundary:
        raise ValidationError("graph has no boundary; use green_grounded with a root vertex")
    idx = list(graph.interior)
    A = -laplacian(graph)[np.ix_(idx, idx)]
    logger.debug("factorizing Dirichlet Laplacian of size %d", len(idx))
    table = np.zeros((graph.n, graph.n))
    table[np.ix_(idx, idx)] = _invert_spd(A)
    return GreenFunction(graph=graph, mode="dirichlet", table=table)


def green_grounded(graph: FiniteGraph, root: int) -> GreenFunction:
    """Inverse of -Delta with the root row and column deleted, 0 at the root."""
    if not 0 <= root < graph.n:
        raise ValidationError(f"root {root} not in graph")
    idx = [v for v in graph.vertices if v != root]
    A = -laplacian(graph)[np.ix_(idx, idx)]
    table = np.zeros((graph.n, graph.n))
    if idx:
        table[np.ix_(idx, idx)] = _invert_spd(A)
    return GreenFunction(graph=graph, mode="grounded", table=table, root=root)


def green_for(graph: FiniteGraph, root: Optional[int] = None) -> GreenFunction:
    """Dirichlet Green's function when the graph has a boundary, grounded otherwise."""
    if graph.boundary and root is None:
        return green_dirichlet(graph)
    return green_grounded(graph, 0 if root is None else root)


# Potential kernel


def _z2_integrand(m: int, n: int):
    m = abs(m)

    def f(t):
        A = 2.0 - math.cos(t)
        s = math.sqrt(A * A - 1.0)
        r = 1.0 / (A + s)
        return 2.0 * (1.0 - math.cos(n * t) * r**m) / s

    return f


def _triangular_integrand(m: int, n: int):
    # theta_1 integrated in closed form; t is the remaining angle
    def f(t):
        c = math.cos(t)
        root = math.sqrt((1.0 - c) * (7.0 - c))
        r = 2.0 * math.cos(0.5 * t) / ((3.0 - c) + root)
        return 3.0 * (1.0 - math.cos((0.5 * m + n) * t) * r ** abs(m)) / root

    return f


class PotentialKernel:
    """a(u) = sum_n [P_o(S_n = o) - P_o(S_n = u)] on a planar lattice.

    Z^2 and triangular values come from the Fourier integral with one
    angle done in closed form. Hexagonal values use the sublattice
    reduction of the two-band symbol: on the type-A sublattice the walk
    seen every second step is a lazy triangular walk, so a = (3/2) a_T
    there, and the opposite sublattice follows by harmonicity.
    """

    def __init__(self, lattice: LatticeSpec, quad_tol: float = config.QUAD_TOL):
        if not lattice.planar:
            raise ValidationError(f"potential kernel needs a planar lattice, got {lattice.name}")
        self.lattice = lattice
        self.quad_tol = quad_tol
        self._cache: dict = {}
        self._lock = threading.Lock()

    def _quad(self, integrand) -> float:
        value, _ = integrate.quad(
            integrand, 0.0, math.pi, epsabs=self.quad_tol * 1e-2, epsrel=self.quad_tol, limit=500
        )
        return value / math.pi

    def _compute(self, u: tuple) -> float:
        kind = self.lattice.kind
        if kind == "hypercubic":
            m, n = sorted((abs(u[0]), abs(u[1])), reverse=True)
            if m == 0 and n == 0:
                return 0.0
            return self._quad(_z2_integrand(m, n))
        if kind == "triangular":
            if u == (0, 0):
                return 0.0
            return self._quad(_triangular_integrand(*u))
        m, n, s = u
        if s == 0:
            return 1.5 * self._triangular(m, n)
        # harmonic at a type-B point: mean over its three type-A neighbors
        return sum(1.5 * self._triangular(m + dm, n + dn) for dm, dn, _ in HEXAGONAL.steps_b) / 3.0

    def _triangular(self, m: int, n: int) -> float:
        key = ("tri", m, n)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = 0.0 if (m, n) == (0, 0) else self._quad(_triangular_integrand(m, n))
        with self._lock:
            self._cache[key] = value
        return value

    def __call__(self, u) -> float:
        """a at displacement u from a (type-A) origin, in lattice coordinates."""
        u = tuple(int(x) for x in u)
        if len(u) != len(self.lattice.origin()):
            raise ValidationError(f"{u} is not a {self.lattice.name} lattice point")
        with self._lock:
            if u in self._cache:
                return self._cache[u]
        logger.debug("potential kernel %s at %s", self.lattice.name, u)
        value = self._compute(u)
        with self._lock:
            self._cache[u] = value
        return value

    def between(self, x, y) -> float:
        """a(x, y) for two lattice points."""
        if self.lattice.kind != "hexagonal":
            return self(tuple(b - a for a, b in zip(x, y)))
        if x[2] == 1:
            # point reflection through the midpoint of an A-B edge swaps sublattices
            x = (-x[0], -x[1], 0)
            y = (-y[0], -y[1], 1 - y[2])
        return self((y[0] - x[0], y[1] - x[1], y[2]))

    def laplacian_at(self, u) -> float:
        """(Delta a)(u) = sum over neighbors of a(w) - a(u)."""
        u = tuple(u)
        centre = self.between(self.lattice.origin(), u)
        return sum(
            self.between(self.lattice.origin(), w) - centre for _, w in self.lattice.neighbors(u)
        )


_kernels: dict = {}
_kernels_lock = threading.Lock()


def get_kernel(lattice: LatticeSpec, quad_tol: float = config.QUAD_TOL) -> PotentialKernel:
    """Get or create the shared kernel for a lattice and tolerance."""
    key = (lattice.name, quad_tol)
    with _kernels_lock:
        if key not in _kernels:
            _kernels[key] = PotentialKernel(lattice, quad_tol)
        return _kernels[key]


def potential_kernel(lattice: LatticeSpec, u, quad_tol: float = config.QUAD_TOL) -> float:
    return get_kernel(lattice, quad_tol)(u)


def green_infinite(lattice: LatticeSpec, x, y, quad_tol: float = config.QUAD_TOL) -> float:
    """G_0(x, y) = -a(x - y) / deg."""
    return -get_kernel(lattice, quad_tol).between(x, y) / lattice.degree


def mbar(lattice: LatticeSpec, f: int, g: int, quad_tol: float = config.QUAD_TOL) -> float:
    """Double gradient of G_0 for two edges of the origin star, given by direction index."""
    for e in (f, g):
        if not 0 <= e < lattice.degree:
            raise ValidationError(f"direction {e} is not in the {lattice.name} origin star")
    o = lattice.origin()
    neighbors = dict(lattice.neighbors(o))
    fp, gp = neighbors[f], neighbors[g]
    G0 = lambda x, y: green_infinite(lattice, x, y, quad_tol)
    return G0(o, o) - G0(fp, o) - G0(o, gp) + G0(fp, gp)


def origin_star_matrix(lattice: LatticeSpec, quad_tol: float = config.QUAD_TOL) -> np.ndarray:
    """M-bar over the full origin star, rows and columns in direction order."""
    deg = lattice.degree
    out = np.empty((deg, deg))
    for f in range(deg):
        for g in range(f, deg):
            out[f, g] = out[g, f] = mbar(lattice, f, g, quad_tol)
    return out


if __name__ == "__main__":
    from lattices import TRIANGULAR, Z2

    print("Z2 a(1,0) =", potential_kernel(Z2, (1, 0)))
    print("Z2 a(1,1) =", potential_kernel(Z2, (1, 1)), "vs 4/pi =", 4 / math.pi)
    print("tri a(1,0) =", potential_kernel(TRIANGULAR, (1, 0)))
    print("hex M-bar:")
    print(origin_star_matrix(HEXAGONAL))
