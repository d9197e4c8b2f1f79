"""Joint cumulants of UST degree indicators, and the moment/cumulant partition calculus.

A group (S, k) stands for the indicator that exactly k edges of S are in
the tree, expanded as (-1)^k sum over E in S, |E| >= k, of
(-1)^|E| binom(|E|, k) prod zeta(E). Cumulants of such fields reduce to
signed sums over connected permutations of transfer-current entries.
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from sympy import bell
from sympy.utilities.iterables import multiset_partitions

import config
from degrees import DegreeQuery, degree_pmf_joint, degree_pmf_single, ordered_sum
from errors import GuardExceeded, NotGoodSetError, ValidationError
from graphs import DirectedEdge, adjacent_pair, edge_star, is_good_set
from permutations import StarSet, connected_sum
from transfer import TransferMatrix

logger = logging.getLogger(__name__)

MAX_MOMENT_POINTS = 6


@dataclass(frozen=True)
class CumulantQuery(DegreeQuery):
    """Joint cumulant of 1{D_v = k_v}, v in V."""
    edge_in_tree: Optional[bool] = None  # only for the neighbor extension


class PartitionLattice:
    """Set partitions of range(n) with their Moebius weights against the top element."""

    def __init__(self, n: int):
        if n < 1:
            raise ValidationError("partition lattice needs at least one element")
        self.n = n
        self.partitions = [tuple(tuple(b) for b in p) for p in multiset_partitions(list(range(n)))]
        if len(self.partitions) != int(bell(n)):
            raise RuntimeError(f"expected Bell({n}) partitions, got {len(self.partitions)}")

    def __iter__(self):
        return iter(self.partitions)

    def __len__(self):
        return len(self.partitions)

    @staticmethod
    def mobius(partition) -> int:
        """(-1)^(|pi|-1) (|pi|-1)!"""
        size = len(partition)
        return (-1) ** (size - 1) * math.factorial(size - 1)


def _block_key(block, labels) -> frozenset:
    return frozenset(labels[i] for i in block)


def cumulants_from_moments(moments: dict, A) -> float:
    """kappa(A) = sum over partitions pi of A of mu(pi) prod_B E[prod_{i in B} X_i].

    `moments` maps frozensets of labels to joint moments.
    """
    labels = list(A)
    terms = []
    for partition in PartitionLattice(len(labels)):
        term = float(PartitionLattice.mobius(partition))
        for block in partition:
            key = _block_key(block, labels)
            if key not in moments:
                raise ValidationError(f"missing moment for block {sorted(key, key=str)}")
            term *= moments[key]
        terms.append(term)
    return math.fsum(terms)


def moments_from_cumulants(kappa: dict, A) -> float:
    """E[prod_{i in A} X_i] = sum over partitions pi of A of prod_B kappa(B)."""
    labels = list(A)
    terms = []
    for partition in PartitionLattice(len(labels)):
        term = 1.0
        for block in partition:
            key = _block_key(block, labels)
            if key not in kappa:
                raise ValidationError(f"missing cumulant for block {sorted(key, key=str)}")
            term *= kappa[key]
        terms.append(term)
    return math.fsum(terms)


# Direct formula


def subset_multiplicities(edges: tuple, k: int) -> Counter:
    """How many (eta, A) pairs, eta a k-subset and A the rest of E, collapse to each E."""
    counts = Counter()
    for eta in itertools.combinations(edges, k):
        rest = [e for e in edges if e not in eta]
        for size in range(len(rest) + 1):
            for A in itertools.combinations(rest, size):
                counts[frozenset(eta + A)] += 1
    return counts


def check_bookkeeping(counts: Counter, k: int):
    for E, count in counts.items():
        if count != math.comb(len(E), k):
            raise RuntimeError(f"{count} (eta, A) pairs collapse to a {len(E)}-edge set, expected binom({len(E)}, {k})")


def _weighted_subsets(edges: tuple, k: int) -> list:
    """(E, (-1)^|E| times the number of (eta, A) pairs giving E) for E in edges with |E| >= k."""
    counts = subset_multiplicities(edges, k)
    check_bookkeeping(counts, k)
    out = []
    for size in range(k, len(edges) + 1):
        out.extend((E, (-1) ** size * counts[frozenset(E)]) for E in itertools.combinations(edges, size))
    return out


def cumulant_from_stars(
    M: TransferMatrix,
    groups,
    max_perm: int = config.MAX_PERM,
    method: str = "partitions",
    threads: int = 1,
) -> float:
    """Joint cumulant of the exactly-k indicators of disjoint edge groups [(S, k), ...].

    Each edge-subset profile contributes its weight times the signed sum over
    connected permutations of the minor. method="permutations" enumerates those
    permutations (up to max_perm edges); "partitions" gets the same sum by
    Moebius inversion of block minors over vertex partitions.
    """
    groups = [(tuple(DirectedEdge(*e) for e in S), int(k)) for S, k in groups]
    if not groups:
        raise ValidationError("cumulant of no fields")
    seen = set()
    for S, k in groups:
        if k < 0:
            raise ValidationError(f"negative target count {k}")
        for e in S:
            if e.undirected() in seen:
                raise ValidationError(f"edge {e} appears in two groups")
            seen.add(e.undirected())
    if any(k > len(S) for S, k in groups):
        return 0.0

    sign = (-1) ** sum(k for _, k in groups)
    choices = list(itertools.product(*(_weighted_subsets(S, k) for S, k in groups)))
    logger.debug("cumulant over %d edge-subset profiles (%s)", len(choices), method)

    def term(choice) -> float:
        weight = math.prod(w for _, w in choice)
        E = StarSet.from_groups({g: E for g, (E, _) in enumerate(choice)})
        K = M.submatrix(E.items) if len(E) else None
        if K is None:
            return weight * (1.0 if len(groups) == 1 else 0.0)
        return weight * connected_sum(K, E, max_perm, method)

    return sign * ordered_sum(term, choices, threads)


def _check_good(M: TransferMatrix, V):
    if not is_good_set(M.graph, V):
        raise NotGoodSetError(*adjacent_pair(M.graph, V))


def _as_cumulant_query(q) -> CumulantQuery:
    if isinstance(q, CumulantQuery):
        return q
    return CumulantQuery(q.V, q.k)


def cumulant_direct(
    M: TransferMatrix,
    q: CumulantQuery,
    max_perm: int = config.MAX_PERM,
    method: str = "partitions",
    threads: int = 1,
) -> float:
    """kappa(1{D_v = k_v} : v in V) over a good set V.

    With edge_in_tree set, V must be two neighbors and the value is the
    three-field cumulant of neighbor_cumulant for that flag.
    """
    q = _as_cumulant_query(q)
    if q.edge_in_tree is not None:
        if len(q.V) != 2:
            raise ValidationError("the shared-edge flag needs exactly two neighboring points")
        (v, w), (k_v, k_w) = q.V, q.k
        return neighbor_cumulant(M, v, w, k_v, k_w, q.edge_in_tree, max_perm, method)
    _check_good(M, q.V)
    groups = [(edge_star(M.graph, v).edges, k) for v, k in zip(q.V, q.k)]
    return cumulant_from_stars(M, groups, max_perm, method, threads)


def cumulant_via_moments(M: TransferMatrix, q: CumulantQuery, max_enum_joint: int = config.MAX_ENUM_JOINT) -> float:
    """Same cumulant from joint degree PMFs of every sub-block, Moebius-inverted."""
    q = _as_cumulant_query(q)
    if q.edge_in_tree is not None:
        raise ValidationError("the moment expansion covers good sets only")
    if len(q.V) > MAX_MOMENT_POINTS:
        raise GuardExceeded("points in moment expansion", len(q.V), MAX_MOMENT_POINTS)
    _check_good(M, q.V)
    targets = q.targets()
    moments = {}
    for size in range(1, len(q.V) + 1):
        for block in itertools.combinations(q.V, size):
            if size == 1:
                value = degree_pmf_single(M, block[0], targets[block[0]])
            else:
                value = degree_pmf_joint(M, DegreeQuery(block, [targets[v] for v in block]), max_enum_joint)
            moments[frozenset(block)] = value
    return cumulants_from_moments(moments, q.V)


# Neighboring points


def shared_edge(M: TransferMatrix, v: int, w: int) -> DirectedEdge:
    if not M.graph.has_edge(v, w):
        raise ValidationError(f"{v} and {w} are not neighbors")
    return DirectedEdge(v, w)


def neighbor_groups(M: TransferMatrix, v: int, w: int, k_v: int, k_w: int, edge_in_tree: bool) -> list:
    """The three fields whose product is 1{D_v = k_v, D_w = k_w, e in T (or not)}."""
    e = shared_edge(M, v, w)
    key = e.undirected()
    rest_v = tuple(f for f in edge_star(M.graph, v).edges if f.undirected() != key)
    rest_w = tuple(f for f in edge_star(M.graph, w).edges if f.undirected() != key)
    if edge_in_tree:
        if k_v < 1 or k_w < 1:
            raise ValidationError("with the shared edge in the tree both degrees are at least 1")
        return [(rest_v, k_v - 1), (rest_w, k_w - 1), ((e,), 1)]
    return [(rest_v, k_v), (rest_w, k_w), ((e,), 0)]


def neighbor_cumulant(
    M: TransferMatrix,
    v: int,
    w: int,
    k_v: int,
    k_w: int,
    edge_in_tree: bool,
    max_perm: int = config.MAX_PERM,
    method: str = "partitions",
) -> float:
    """Joint cumulant of the rest-of-star indicators at v and w and the shared-edge field."""
    return cumulant_from_stars(M, neighbor_groups(M, v, w, k_v, k_w, edge_in_tree), max_perm, method)


@dataclass
class NeighborSplit:
    """P(D_v = k_v, D_w = k_w) split by whether the shared edge is in the tree."""
    v: int
    w: int
    k_v: int
    k_w: int
    in_tree: float
    out_of_tree: float

    @property
    def total(self) -> float:
        return self.in_tree + self.out_of_tree

    def to_dict(self):
        return {
            "v": self.v,
            "w": self.w,
            "k_v": self.k_v,
            "k_w": self.k_w,
            "in_tree": self.in_tree,
            "out_of_tree": self.out_of_tree,
            "total": self.total,
        }


def _moment_from_groups(M: TransferMatrix, groups: list, max_perm: int, method: str) -> float:
    labels = list(range(len(groups)))
    kappa = {}
    for size in range(1, len(groups) + 1):
        for block in itertools.combinations(labels, size):
            kappa[frozenset(block)] = cumulant_from_stars(M, [groups[i] for i in block], max_perm, method)
    return moments_from_cumulants(kappa, labels)


def neighbor_joint_probability(
    M: TransferMatrix,
    v: int,
    w: int,
    k_v: int,
    k_w: int,
    max_perm: int = config.MAX_PERM,
    method: str = "partitions",
) -> NeighborSplit:
    """Rebuild each flag's probability from its 1-, 2- and 3-point cumulants."""
    pieces = {}
    for flag in (True, False):
        if flag and (k_v < 1 or k_w < 1):
            pieces[flag] = 0.0
            continue
        pieces[flag] = _moment_from_groups(M, neighbor_groups(M, v, w, k_v, k_w, flag), max_perm, method)
    return NeighborSplit(v=v, w=w, k_v=k_v, k_w=k_w, in_tree=pieces[True], out_of_tree=pieces[False])


if __name__ == "__main__":
    from graphs import grid_graph
    from green import green_for
    from transfer import transfer_matrix

    graph = grid_graph(4, 4)
    M = transfer_matrix(green_for(graph))
    q = CumulantQuery((5, 10), (2, 2))
    print("direct:      ", cumulant_direct(M, q))
    print("via moments: ", cumulant_via_moments(M, q))
    split = neighbor_joint_probability(M, 5, 6, 1, 1)
    print("neighbor split:", split.to_dict())
