"""Exact UST degree distributions from transfer-current minors."""

import itertools
import logging
import math
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from scipy.special import gammaln
from sympy.functions.combinatorial.numbers import stirling

import config
from errors import GuardExceeded, NotGoodSetError, ValidationError
from graphs import adjacent_pair, edge_star, is_good_set
from transfer import EdgeProbQuery, TransferMatrix, clamp_probability, det_submatrix, edge_probability

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DegreeQuery:
    """P(D_v = k_v for every v in V). `k` may be a mapping or a sequence aligned with V."""
    V: tuple
    k: tuple

    def __post_init__(self):
        V = tuple(int(v) for v in self.V)
        if isinstance(self.k, Mapping):
            missing = [v for v in V if v not in self.k]
            if missing:
                raise ValidationError(f"no target degree for vertices {missing}")
            k = tuple(int(self.k[v]) for v in V)
        else:
            k = tuple(int(x) for x in self.k)
        if len(k) != len(V):
            raise ValidationError(f"{len(V)} vertices but {len(k)} target degrees")
        if len(set(V)) != len(V):
            raise ValidationError(f"repeated vertex in {V}")
        if any(x < 1 for x in k):
            raise ValidationError("target degrees must be at least 1 (a spanning tree touches every vertex)")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "k", k)

    def targets(self) -> dict:
        return dict(zip(self.V, self.k))


@dataclass
class DegreePMF:
    """Degree distribution of one vertex (or a tuple of vertices for joint tables)."""
    vertex: object
    table: dict = field(default_factory=dict)

    def __getitem__(self, k):
        return self.table.get(k, 0.0)

    def total(self) -> float:
        return math.fsum(self.table.values())

    def mean(self) -> float:
        return math.fsum(k * p for k, p in self.table.items())

    def to_dict(self):
        return {"vertex": self.vertex, "table": {str(k): p for k, p in sorted(self.table.items())}}

    @classmethod
    def from_dict(cls, data):
        return cls(vertex=data["vertex"], table={int(k): p for k, p in data["table"].items()})


def ordered_sum(fn, items: list, threads: int = 1) -> float:
    """Evaluate fn over items, reducing in item order."""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(fn, items))
    else:
        values = [fn(x) for x in items]
    return math.fsum(values)


def degree_pmf_single(M: TransferMatrix, v: int, k: int, max_enum: int = config.MAX_ENUM) -> float:
    """(-1)^k sum over S in E_v, |S| >= k, of (-1)^|S| binom(|S|, k) det(M)_S."""
    star = edge_star(M.graph, v)
    d = len(star)
    if k < 1:
        raise ValidationError(f"degree {k} out of range (must be >= 1)")
    if k > d:
        return 0.0
    if d > max_enum:
        raise GuardExceeded("star size", d, max_enum)
    terms = []
    for size in range(k, d + 1):
        weight = (-1) ** size * math.comb(size, k)
        for S in itertools.combinations(star.edges, size):
            terms.append(weight * det_submatrix(M, S, S))
    return clamp_probability((-1) ** k * math.fsum(terms))


def degree_pmf(M: TransferMatrix, v: int, max_enum: int = config.MAX_ENUM) -> DegreePMF:
    """The full table k -> P(D_v = k) for k = 1..deg(v)."""
    d = len(edge_star(M.graph, v))
    return DegreePMF(vertex=v, table={k: degree_pmf_single(M, v, k, max_enum) for k in range(1, d + 1)})


def degree_pmf_joint(
    M: TransferMatrix, q: DegreeQuery, max_enum_joint: int = config.MAX_ENUM_JOINT, threads: int = 1
) -> float:
    """Sum over edge selections with |eta(v)| = k_v of P(eta present, rest of the stars absent)."""
    graph = M.graph
    if not is_good_set(graph, q.V):
        raise NotGoodSetError(*adjacent_pair(graph, q.V))
    stars = [edge_star(graph, v) for v in q.V]
    total_degree = sum(len(s) for s in stars)
    if total_degree > max_enum_joint:
        raise GuardExceeded("joint star size", total_degree, max_enum_joint)
    if any(k > len(s) for s, k in zip(stars, q.k)):
        return 0.0

    selections = list(itertools.product(*(itertools.combinations(s.edges, k) for s, k in zip(stars, q.k))))
    logger.debug("joint degree PMF over %d selections", len(selections))

    def term(choice) -> float:
        present = tuple(e for group in choice for e in group)
        chosen = set(present)
        absent = tuple(e for s in stars for e in s.edges if e not in chosen)
        return edge_probability(M, EdgeProbQuery(present, absent))

    return clamp_probability(ordered_sum(term, selections, threads))


def degree_probability(M: TransferMatrix, q: DegreeQuery, **kwargs) -> float:
    """Single-vertex queries go through the star formula, larger ones through the joint sum."""
    if len(q.V) == 1:
        return degree_pmf_single(M, q.V[0], q.k[0], kwargs.get("max_enum", config.MAX_ENUM))
    return degree_pmf_joint(M, q, kwargs.get("max_enum_joint", config.MAX_ENUM_JOINT), kwargs.get("threads", 1))


def joint_pmf_table(M: TransferMatrix, V, max_enum_joint: int = config.MAX_ENUM_JOINT) -> DegreePMF:
    """All k-profiles of a good set, keyed by degree tuple."""
    degrees = [range(1, len(edge_star(M.graph, v)) + 1) for v in V]
    table = {ks: degree_pmf_joint(M, DegreeQuery(tuple(V), ks), max_enum_joint) for ks in itertools.product(*degrees)}
    return DegreePMF(vertex=tuple(V), table=table)


# Moments


def factorial_moment(M: TransferMatrix, v: int, m: int) -> float:
    """E[(D_v)_m] = m! sum over m-subsets S of the star of det(M)_S."""
    if m < 0:
        raise ValidationError("moment order must be non-negative")
    star = edge_star(M.graph, v)
    total = math.fsum(det_submatrix(M, S, S) for S in itertools.combinations(star.edges, m))
    return math.factorial(m) * total


def degree_moment(M: TransferMatrix, v: int, m: int) -> float:
    """E[D_v^m] = sum_i S(m, i) E[(D_v)_i], Stirling numbers of the second kind."""
    if m < 0:
        raise ValidationError("moment order must be non-negative")
    return math.fsum(int(stirling(m, i)) * factorial_moment(M, v, i) for i in range(m + 1))


# Complete graphs


def kn_minor(n: int, size: int) -> Fraction:
    """det(M)_E for |E| = size edges of one K_n star."""
    if not 0 <= size <= n - 1:
        raise ValidationError(f"a K_{n} star has no {size}-edge subset")
    return Fraction(1 + size, n**size)


def kn_degree_closed_form(n: int, k: int) -> float:
    """P(D_v = k) on K_n, evaluated in log space.

    (1+k)(n-1)^-(2+k) ((n-1)/n)^n n [n binom(n-1, k) - binom(n, 1+k)]
    simplifies to k n^2 binom(n-1, k) (n-1)^-(2+k) (1 - 1/n)^n.
    """
    if n < 2:
        raise ValidationError("complete graph needs n >= 2")
    if not 1 <= k <= n - 1:
        raise ValidationError(f"degree {k} out of range 1..{n - 1}")
    log_binom = gammaln(n) - gammaln(k + 1) - gammaln(n - k)
    log_p = (
        math.log(k)
        + 2.0 * math.log(n)
        + log_binom
        - (2 + k) * math.log(n - 1)
        + n * math.log1p(-1.0 / n)
    )
    return float(math.exp(log_p))


def poisson_limit(k: int) -> float:
    """Limit of P(D_v = k) on K_n: the law of 1 + Poisson(1)."""
    if k < 1:
        raise ValidationError("degree must be at least 1")
    return math.exp(-1.0) / math.factorial(k - 1)


def poisson_limit_gap(n: int, kmax: int) -> float:
    """max over k <= kmax of |P_n(D = k) - e^-1 / (k-1)!|."""
    if n < 2:
        raise ValidationError("complete graph needs n >= 2")
    gaps = []
    for k in range(1, kmax + 1):
        exact = kn_degree_closed_form(n, k) if k <= n - 1 else 0.0
        gaps.append(abs(exact - poisson_limit(k)))
    return max(gaps)


if __name__ == "__main__":
    from graphs import complete_graph
    from green import green_for
    from transfer import transfer_matrix

    M = transfer_matrix(green_for(complete_graph(4)))
    pmf = degree_pmf(M, 0)
    print("K4 degree PMF:", {k: round(p, 6) for k, p in pmf.table.items()})
    print("closed form:  ", {k: round(kn_degree_closed_form(4, k), 6) for k in range(1, 4)})
    for n in (10**2, 10**4, 10**6):
        print(f"Poisson gap n={n}: {poisson_limit_gap(n, 6):.2e}")
