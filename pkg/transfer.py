"""Transfer-current matrix and determinantal edge probabilities."""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

import config
from errors import GuardExceeded, ProbabilityError, ValidationError
from graphs import DirectedEdge
from green import GreenFunction

logger = logging.getLogger(__name__)


class TransferMatrix:
    """M(f, g) = grad grad G(f-, g-) over a directed-edge universe.

    Lookups accept either orientation of an edge; reversing one argument
    flips the sign.
    """

    def __init__(self, green: GreenFunction, edges: Optional[Iterable] = None):
        graph = green.graph
        edges = graph.edges if edges is None else [DirectedEdge(*e) for e in edges]
        self.green = green
        self.graph = graph
        self.edges = tuple(edges)
        self._index = {}
        for i, e in enumerate(self.edges):
            graph.edge_index(e)  # validates membership
            if e in self._index or e.reverse() in self._index:
                raise ValidationError(f"edge {e} listed twice")
            self._index[e] = (i, 1)
            self._index[e.reverse()] = (i, -1)

        B = np.zeros((len(self.edges), graph.n))
        for i, e in enumerate(self.edges):
            B[i, e.tip] += 1.0
            B[i, e.tail] -= 1.0
        self.matrix = B @ green.table @ B.T

    def __len__(self):
        return len(self.edges)

    def position(self, e) -> tuple:
        """(row index, orientation sign) of an edge in this universe."""
        e = DirectedEdge(*e)
        try:
            return self._index[e]
        except KeyError:
            raise ValidationError(f"edge {e} is not in the transfer-matrix universe")

    def entry(self, f, g) -> float:
        i, si = self.position(f)
        j, sj = self.position(g)
        return si * sj * float(self.matrix[i, j])

    def submatrix(self, rows: Iterable, cols: Optional[Iterable] = None) -> np.ndarray:
        """M restricted to the given directed edges, in the given orientations."""
        rows = [self.position(e) for e in rows]
        cols = rows if cols is None else [self.position(e) for e in cols]
        ri = [i for i, _ in rows]
        ci = [j for j, _ in cols]
        signs = np.outer([s for _, s in rows], [s for _, s in cols])
        return self.matrix[np.ix_(ri, ci)] * signs

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    def trace(self) -> float:
        return float(np.trace(self.matrix))


def transfer_matrix(green: GreenFunction, edges: Optional[Iterable] = None) -> TransferMatrix:
    return TransferMatrix(green, edges)


@dataclass(frozen=True)
class EdgeProbQuery:
    """P(F in T, G disjoint from T)."""
    F: tuple = field(default_factory=tuple)
    G: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "F", tuple(DirectedEdge(*e) for e in self.F))
        object.__setattr__(self, "G", tuple(DirectedEdge(*e) for e in self.G))
        seen = set()
        for e in self.F + self.G:
            key = e.undirected()
            if key in seen:
                raise ValidationError(f"edge {e} appears twice in the query (F and G must be disjoint)")
            seen.add(key)


def clamp_probability(p: float, slack: float = config.DET_CLAMP) -> float:
    """Clamp round-off outside [0, 1]; anything larger is an error."""
    if 0.0 <= p <= 1.0:
        return p
    if -slack <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + slack:
        return 1.0
    raise ProbabilityError(f"determinant {p!r} is not a probability")


def det_submatrix(M, rows: Iterable, cols: Iterable) -> float:
    """Determinant of a minor via LU with partial pivoting.

    M is a TransferMatrix (rows/cols are edges) or an array (rows/cols are indices).
    """
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols):
        raise ValidationError(f"minor is {len(rows)}x{len(cols)}, not square")
    if not rows:
        return 1.0
    if isinstance(M, TransferMatrix):
        K = M.submatrix(rows, cols)
    else:
        K = np.asarray(M)[np.ix_(rows, cols)]
    return float(np.linalg.det(K))


def yes_no_matrix(M: TransferMatrix, q: EdgeProbQuery) -> np.ndarray:
    """Rows for F unchanged; rows for G negated off the diagonal with 1 - M on it."""
    K = M.submatrix(q.F + q.G)
    nf = len(q.F)
    K[nf:, :] *= -1.0
    K[np.arange(nf, len(K)), np.arange(nf, len(K))] += 1.0
    return K


def edge_probability(M: TransferMatrix, q: EdgeProbQuery, slack: float = config.DET_CLAMP) -> float:
    """P(F subset of T, G disjoint from T) as a single determinant."""
    if not q.F and not q.G:
        return 1.0
    return clamp_probability(float(np.linalg.det(yes_no_matrix(M, q))), slack)


def inclusion_exclusion_probability(
    M: TransferMatrix, q: EdgeProbQuery, max_enum: int = config.MAX_ENUM, slack: float = config.DET_CLAMP
) -> float:
    """Same probability as an alternating sum of pure-inclusion minors."""
    if len(q.G) > max_enum:
        raise GuardExceeded("inclusion-exclusion over G", len(q.G), max_enum)
    terms = []
    for size in range(len(q.G) + 1):
        for gamma in itertools.combinations(q.G, size):
            S = q.F + gamma
            terms.append((-1) ** size * det_submatrix(M, S, S))
    return clamp_probability(math.fsum(terms), slack)
