"""Permutations of star-tagged edge sets: connectivity, bare permutations and surgery.

A StarSet is an ordered set of items (edges) each tagged with the vertex
whose star it belongs to. Permutations act on item positions. A
permutation tau induces the multigraph V_tau with one edge per cross-star
mapping f -> tau(f); tau is connected when V_tau is, and bare when in
addition every vertex has degree 2 (one exit and one entry per star).
"""

import functools
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import networkx as nx
import numpy as np
from sympy.utilities.iterables import multiset_partitions

import config
from errors import GuardExceeded, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StarSet:
    """Items grouped into stars. `directions`/`p` give each item's lattice direction index."""
    items: tuple
    tags: tuple
    vertices: tuple = ()
    directions: Optional[tuple] = None
    p: Optional[int] = None

    def __post_init__(self):
        if len(self.items) != len(self.tags):
            raise ValidationError(f"{len(self.items)} items but {len(self.tags)} star tags")
        if len(set(self.items)) != len(self.items):
            raise ValidationError("star set has repeated items")
        if self.directions is not None and len(self.directions) != len(self.items):
            raise ValidationError("one direction per item required")
        vertices = tuple(self.vertices) or tuple(dict.fromkeys(self.tags))
        stray = set(self.tags) - set(vertices)
        if stray:
            raise ValidationError(f"items tagged with unknown vertices {sorted(stray, key=str)}")
        object.__setattr__(self, "vertices", vertices)

    @classmethod
    def from_groups(cls, groups, directions=None, p=None) -> "StarSet":
        """From an ordered mapping vertex -> items (and optionally vertex -> directions)."""
        items, tags, dirs = [], [], []
        for v, group in groups.items():
            items.extend(group)
            tags.extend([v] * len(group))
            if directions is not None:
                dirs.extend(directions[v])
        return cls(tuple(items), tuple(tags), tuple(groups), tuple(dirs) if directions is not None else None, p)

    @classmethod
    def from_sizes(cls, sizes, p: Optional[int] = None) -> "StarSet":
        """Abstract stars: vertex v holds items (v, 0), ..., (v, size-1) with direction j."""
        groups = {v: [(v, j) for j in range(s)] for v, s in enumerate(sizes)}
        dirs = {v: list(range(s)) for v, s in enumerate(sizes)}
        return cls.from_groups(groups, dirs, p if p is not None else max(sizes, default=1))

    def __len__(self):
        return len(self.items)

    @functools.cached_property
    def _index(self) -> dict:
        return {item: i for i, item in enumerate(self.items)}

    def index(self, item) -> int:
        try:
            return self._index[item]
        except KeyError:
            raise ValidationError(f"{item} is not in the star set")

    def tag(self, item):
        return self.tags[self.index(item)]

    def star(self, v) -> tuple:
        return tuple(item for item, t in zip(self.items, self.tags) if t == v)

    def direction(self, item) -> Optional[int]:
        if self.directions is None:
            return None
        return self.directions[self.index(item)]

    def subset(self, keep) -> "StarSet":
        """Sub-star-set over `keep`, in this set's order; all vertices are retained."""
        keep = set(keep)
        pos = [i for i, item in enumerate(self.items) if item in keep]
        return StarSet(
            tuple(self.items[i] for i in pos),
            tuple(self.tags[i] for i in pos),
            self.vertices,
            tuple(self.directions[i] for i in pos) if self.directions is not None else None,
            self.p,
        )


@dataclass(frozen=True)
class EdgePermutation:
    """A bijection of a StarSet; mapping[i] is the position of the image of item i."""
    domain: StarSet
    mapping: tuple

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.domain))):
            raise ValidationError("mapping is not a bijection of the domain")

    @classmethod
    def from_dict(cls, domain: StarSet, images: dict) -> "EdgePermutation":
        return cls(domain, tuple(domain.index(images[item]) for item in domain.items))

    @classmethod
    def identity(cls, domain: StarSet) -> "EdgePermutation":
        return cls(domain, tuple(range(len(domain))))

    def __call__(self, item):
        return self.domain.items[self.mapping[self.domain.index(item)]]

    def __len__(self):
        return len(self.mapping)

    def as_dict(self) -> dict:
        return {item: self.domain.items[j] for item, j in zip(self.domain.items, self.mapping)}

    def cycles(self) -> list:
        return _cycles(self.mapping)

    @functools.cached_property
    def sign(self) -> int:
        return _sign(self.mapping)

    def compose(self, other: "EdgePermutation") -> "EdgePermutation":
        """(self o other)(f) = self(other(f))."""
        if other.domain != self.domain:
            raise ValidationError("cannot compose permutations of different star sets")
        return EdgePermutation(self.domain, tuple(self.mapping[j] for j in other.mapping))

    def inverse(self) -> "EdgePermutation":
        inv = [0] * len(self.mapping)
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return EdgePermutation(self.domain, tuple(inv))

    def kernel_factors(self, K: Callable, items=None) -> list:
        """[K(f, tau(f)) for f in items] (all items by default)."""
        items = self.domain.items if items is None else items
        return [K(f, self(f)) for f in items]


def _cycles(mapping) -> list:
    seen = [False] * len(mapping)
    out = []
    for start in range(len(mapping)):
        if seen[start]:
            continue
        cycle = []
        i = start
        while not seen[i]:
            seen[i] = True
            cycle.append(i)
            i = mapping[i]
        out.append(tuple(cycle))
    return out


def _sign(mapping) -> int:
    return -1 if (len(mapping) - len(_cycles(mapping))) % 2 else 1


# The multigraph V_tau


@dataclass
class TauMultigraph:
    vertices: tuple
    counts: dict = field(default_factory=dict)  # frozenset({v, w}) -> multiplicity

    def degree(self, v) -> int:
        return sum(c for pair, c in self.counts.items() if v in pair)

    def edge_count(self) -> int:
        return sum(self.counts.values())

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.vertices)
        for pair, c in self.counts.items():
            v, w = tuple(pair)
            for _ in range(c):
                g.add_edge(v, w)
        return g

    def is_connected(self) -> bool:
        if len(self.vertices) <= 1:
            return True
        return nx.is_connected(self.to_networkx())


def tau_multigraph(tau: EdgePermutation) -> TauMultigraph:
    tags = tau.domain.tags
    counts = Counter()
    for i, j in enumerate(tau.mapping):
        if tags[i] != tags[j]:
            counts[frozenset((tags[i], tags[j]))] += 1
    return TauMultigraph(tau.domain.vertices, dict(counts))


@dataclass(frozen=True)
class Classification:
    connected: bool
    bare: bool
    sigma: Optional[dict] = None  # vertex -> vertex, for bare tau on two or more vertices


def classify(tau: EdgePermutation) -> Classification:
    domain = tau.domain
    if len(domain.vertices) == 1:
        return Classification(connected=True, bare=True)
    if any(not domain.star(v) for v in domain.vertices):
        return Classification(connected=False, bare=False)
    graph = tau_multigraph(tau)
    connected = graph.is_connected()
    bare = connected and all(graph.degree(v) == 2 for v in domain.vertices)
    if not bare:
        return Classification(connected=connected, bare=False)
    sigma = {}
    for i, j in enumerate(tau.mapping):
        if domain.tags[i] != domain.tags[j]:
            sigma[domain.tags[i]] = domain.tags[j]
    return Classification(connected=True, bare=True, sigma=sigma)


def is_full_cycle(sigma: dict, vertices) -> bool:
    vertices = list(vertices)
    if len(vertices) < 2 or set(sigma) != set(vertices) or set(sigma.values()) != set(vertices):
        return False
    v, steps = vertices[0], 0
    while True:
        v = sigma[v]
        steps += 1
        if v == vertices[0]:
            return steps == len(vertices)


def full_cycles(vertices) -> Iterator[dict]:
    """All (n-1)! cyclic permutations of the vertices."""
    vertices = list(vertices)
    first, rest = vertices[0], vertices[1:]
    for order in itertools.permutations(rest):
        ring = [first, *order]
        yield {ring[i]: ring[(i + 1) % len(ring)] for i in range(len(ring))}


# Connected permutations


def _connected_mappings(tags: tuple, n_vertices: int) -> Iterator[tuple]:
    """Mappings whose V_tau is connected; tags are vertex indices 0..n_vertices-1.

    Sources are assigned star by star. A union-find over vertices tracks the
    unassigned sources of each component; a component that runs out of them
    is closed, so the branch dies unless it already spans every vertex.
    """
    n = len(tags)
    if n_vertices == 1:
        yield from itertools.permutations(range(n))
        return
    counts = Counter(tags)
    if len(counts) < n_vertices:
        return
    order = sorted(range(n), key=lambda i: tags[i])
    image = [0] * n
    used = [False] * n

    def find(parent, x):
        while parent[x] != x:
            x = parent[x]
        return x

    def extend(pos, parent, open_, size):
        if pos == n:
            yield tuple(image)
            return
        i = order[pos]
        for j in range(n):
            if used[j]:
                continue
            p, o, s = parent[:], open_[:], size[:]
            ra, rb = find(p, tags[i]), find(p, tags[j])
            o[ra] -= 1
            if ra != rb:
                p[rb] = ra
                o[ra] += o[rb]
                s[ra] += s[rb]
            if o[ra] == 0 and s[ra] < n_vertices:
                continue
            used[j] = True
            image[i] = j
            yield from extend(pos + 1, p, o, s)
            used[j] = False

    yield from extend(0, list(range(n_vertices)), [counts[v] for v in range(n_vertices)], [1] * n_vertices)


def _vertex_indices(E: StarSet) -> tuple:
    position = {v: i for i, v in enumerate(E.vertices)}
    return tuple(position[t] for t in E.tags)


def enum_connected(E: StarSet, max_perm: int = config.MAX_PERM) -> Iterator[EdgePermutation]:
    """Every permutation of E with connected V_tau, each once."""
    if len(E) > max_perm:
        raise GuardExceeded("permutation enumeration", len(E), max_perm)
    if len(E.vertices) > 1 and any(not E.star(v) for v in E.vertices):
        return
    for mapping in _connected_mappings(_vertex_indices(E), len(E.vertices)):
        yield EdgePermutation(E, mapping)


def _block_det(K: np.ndarray, idx: list) -> float:
    if not idx:
        return 1.0
    return float(np.linalg.det(K[np.ix_(idx, idx)]))


def connected_sum(
    K: np.ndarray, E: StarSet, max_perm: int = config.MAX_PERM, method: str = "auto"
) -> float:
    """sum over connected tau of sign(tau) prod_f K(f, tau(f)), K indexed in E's item order.

    method "permutations" enumerates connected permutations, "partitions"
    Moebius-inverts block principal minors over vertex partitions (every
    permutation splits into connected pieces on the blocks of a unique
    partition). "auto" enumerates up to max_perm items.
    """
    K = np.asarray(K, dtype=float)
    n_vertices = len(E.vertices)
    if K.shape != (len(E), len(E)):
        raise ValidationError(f"kernel is {K.shape}, star set has {len(E)} items")
    if n_vertices > 1 and any(not E.star(v) for v in E.vertices):
        return 0.0
    if method == "auto":
        method = "permutations" if len(E) <= max_perm else "partitions"

    if method == "permutations":
        if len(E) > max_perm:
            raise GuardExceeded("permutation enumeration", len(E), max_perm)
        terms = []
        for mapping in _connected_mappings(_vertex_indices(E), n_vertices):
            term = float(_sign(mapping))
            for i, j in enumerate(mapping):
                term *= K[i, j]
                if term == 0.0:
                    break
            terms.append(term)
        return math.fsum(terms)

    if method == "partitions":
        blocks = {v: [i for i, t in enumerate(E.tags) if t == v] for v in E.vertices}
        dets: dict = {}
        terms = []
        for partition in multiset_partitions(list(range(n_vertices))):
            size = len(partition)
            term = (-1) ** (size - 1) * math.factorial(size - 1)
            for block in partition:
                key = frozenset(block)
                if key not in dets:
                    dets[key] = _block_det(K, [i for b in block for i in blocks[E.vertices[b]]])
                term *= dets[key]
            terms.append(term)
        return math.fsum(terms)

    raise ValidationError(f"unknown connected-sum method {method!r}")


# Bare permutations and surgery


@dataclass(frozen=True)
class ExitData:
    """Where a bare permutation enters and leaves one star."""
    entry: object  # eta(v): the item whose preimage lies outside E_v
    exit: object  # eta^alpha(v): the item mapped outside E_v
    alpha: Optional[int]  # direction offset exit - entry mod p, if directions are known

    @property
    def rotated(self) -> bool:
        return self.exit != self.entry


def exit_data(tau: EdgePermutation) -> dict:
    """vertex -> ExitData for a bare permutation on two or more vertices."""
    kind = classify(tau)
    domain = tau.domain
    if not kind.bare or kind.sigma is None:
        raise ValidationError("entry and exit edges are only defined for bare permutations on >= 2 vertices")
    entries, exits = {}, {}
    for i, j in enumerate(tau.mapping):
        if domain.tags[i] != domain.tags[j]:
            exits[domain.tags[i]] = domain.items[i]
            entries[domain.tags[j]] = domain.items[j]
    out = {}
    for v in domain.vertices:
        alpha = None
        if domain.directions is not None and domain.p:
            alpha = (domain.direction(exits[v]) - domain.direction(entries[v])) % domain.p
        out[v] = ExitData(entry=entries[v], exit=exits[v], alpha=alpha)
    return out


@dataclass(frozen=True)
class SurgeryData:
    """tau split at v into its local part omega and the global skeleton tau_minus."""
    v: object
    eta: object
    eta_alpha: object
    alpha: Optional[int]
    omega: EdgePermutation  # on E_v minus eta
    tau_minus: EdgePermutation  # on (E minus E_v) plus eta
    domain: StarSet

    @property
    def rotated(self) -> bool:
        return self.eta_alpha != self.eta


def surgery(tau: EdgePermutation, v) -> SurgeryData:
    """omega(f) = tau(f) on E_v minus eta, except omega(eta^alpha) = tau(eta) when rotated;
    tau_minus(f) = tau(f) off E_v and tau_minus(eta) = tau(eta^alpha)."""
    data = exit_data(tau)
    if v not in data:
        raise ValidationError(f"vertex {v} not in the permutation's star set")
    E = tau.domain
    entry, exit_, alpha = data[v].entry, data[v].exit, data[v].alpha
    star = set(E.star(v))

    omega_domain = E.subset(star - {entry})
    images = {f: tau(f) for f in omega_domain.items}
    if exit_ != entry:
        images[exit_] = tau(entry)
    omega = EdgePermutation.from_dict(omega_domain, images)

    minus_domain = E.subset((set(E.items) - star) | {entry})
    minus_images = {f: tau(f) for f in minus_domain.items if f != entry}
    minus_images[entry] = tau(exit_)
    tau_minus = EdgePermutation.from_dict(minus_domain, minus_images)

    return SurgeryData(v=v, eta=entry, eta_alpha=exit_, alpha=alpha, omega=omega, tau_minus=tau_minus, domain=E)


def reconstruct(data: SurgeryData) -> EdgePermutation:
    """Inverse of surgery: rebuild tau from omega, tau_minus and the entry/exit edges."""
    images = {}
    for f in data.tau_minus.domain.items:
        if f != data.eta:
            images[f] = data.tau_minus(f)
    for f in data.omega.domain.items:
        images[f] = data.omega(f)
    if data.rotated:
        images[data.eta_alpha] = data.tau_minus(data.eta)
        images[data.eta] = data.omega(data.eta_alpha)
    else:
        images[data.eta] = data.tau_minus(data.eta)
    return EdgePermutation.from_dict(data.domain, images)


def surgery_sign_holds(tau: EdgePermutation, data: SurgeryData) -> bool:
    """sign(tau) = (-1)^[rotated] sign(tau_minus) sign(omega)."""
    flip = -1 if data.rotated else 1
    return tau.sign == flip * data.tau_minus.sign * data.omega.sign


def surgery_kernel_holds(tau: EdgePermutation, data: SurgeryData, K: Callable) -> bool:
    """prod over E_v minus eta^alpha of K(f, tau f) equals prod over E_v minus eta of K^alpha(f, omega f),
    where K^alpha(eta^alpha, g) = K(eta, g). Compared as factor multisets."""
    star = data.domain.star(data.v)
    left = [K(f, tau(f)) for f in star if f != data.eta_alpha]

    def K_alpha(f, g):
        return K(data.eta, g) if (data.rotated and f == data.eta_alpha) else K(f, g)

    right = [K_alpha(f, data.omega(f)) for f in data.omega.domain.items]
    return sorted(left) == sorted(right)


def _prescribed_exit(E: StarSet, v, entry, alpha: int):
    if E.directions is None or not E.p:
        raise ValidationError("direction offsets need a star set with directions")
    want = (E.direction(entry) + alpha) % E.p
    for item in E.star(v):
        if E.direction(item) == want:
            return item
    return None


def enum_bare_compatible(E: StarSet, eta: dict, sigma: dict, alpha: dict) -> Iterator[EdgePermutation]:
    """Bare permutations entering each v at eta(v), leaving at eta^alpha(v) and inducing sigma.

    Empty when a prescribed edge is missing from E or sigma is not a full cycle.
    """
    vertices = E.vertices
    if not is_full_cycle(sigma, vertices):
        return
    exits = {}
    for v in vertices:
        if eta.get(v) not in E.star(v):
            return
        exit_ = _prescribed_exit(E, v, eta[v], alpha.get(v, 0))
        if exit_ is None:
            return
        exits[v] = exit_

    fixed = {exits[v]: eta[sigma[v]] for v in vertices}
    local = []
    for v in vertices:
        sources = [f for f in E.star(v) if f != exits[v]]
        targets = [f for f in E.star(v) if f != eta[v]]
        local.append([dict(zip(sources, perm)) for perm in itertools.permutations(targets)])
    for parts in itertools.product(*local):
        images = dict(fixed)
        for part in parts:
            images.update(part)
        yield EdgePermutation.from_dict(E, images)


def omega_bijection_check(E: StarSet, eta: dict, sigma: dict, alpha: dict, v) -> bool:
    """tau -> omega_v^tau maps the compatible permutations onto S(E_v minus eta(v)),
    with every fiber of tau_minus covering it exactly once."""
    count = math.prod(math.factorial(max(len(E.star(u)) - 1, 0)) for u in E.vertices)
    limit = math.factorial(config.MAX_PERM)
    if count > limit:
        raise GuardExceeded("compatible permutations", count, limit)
    compatible = list(enum_bare_compatible(E, eta, sigma, alpha))
    if not compatible:
        return False
    star = E.star(v)
    rest = [f for f in star if f != eta[v]]
    everything = {tuple(p) for p in itertools.permutations(rest)}

    fibers: dict = {}
    for tau in compatible:
        data = surgery(tau, v)
        omega_key = tuple(data.omega(f) for f in rest)
        minus_key = data.tau_minus.mapping
        fibers.setdefault(minus_key, []).append(omega_key)

    for omegas in fibers.values():
        if len(omegas) != math.factorial(len(rest)) or set(omegas) != everything:
            return False
    return len(compatible) == len(fibers) * math.factorial(len(rest))


# Exhaustive property suites


@dataclass
class AuditReport:
    check: str
    stars: tuple
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self):
        return {
            "check": self.check,
            "stars": list(self.stars),
            "cases": self.cases,
            "failures": [str(f) for f in self.failures],
            "passed": self.passed,
        }


def parse_stars(spec: str) -> tuple:
    """'2x4' -> (4, 4); '3,2,2' -> (3, 2, 2)."""
    try:
        if "x" in spec:
            count, size = spec.split("x")
            return (int(size),) * int(count)
        return tuple(int(s) for s in spec.split(","))
    except ValueError:
        raise ValidationError(f"cannot parse star sizes {spec!r} (use e.g. 2x4 or 3,2,2)")


def _random_kernel(E: StarSet, seed: int) -> Callable:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((len(E), len(E)))
    A = A + A.T
    return lambda f, g: float(A[E.index(f), E.index(g)])


def audit(sizes, check: str = "all", seed: int = 0) -> list:
    """Run the surgery and/or bijection suites over every case for the given star sizes."""
    sizes = tuple(sizes)
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValidationError("audits need at least two non-empty stars")
    if check not in ("surgery", "bijection", "all"):
        raise ValidationError(f"unknown audit {check!r}")
    E = StarSet.from_sizes(sizes)
    reports = []

    if check in ("surgery", "all"):
        if len(E) > config.MAX_PERM:
            raise GuardExceeded("surgery audit size", len(E), config.MAX_PERM)
        report = AuditReport("surgery", sizes)
        K = _random_kernel(E, seed)
        for mapping in itertools.permutations(range(len(E))):
            exits = Counter(E.tags[i] for i, j in enumerate(mapping) if E.tags[i] != E.tags[j])
            if len(exits) != len(E.vertices) or any(c != 1 for c in exits.values()):
                continue
            tau = EdgePermutation(E, mapping)
            if not classify(tau).bare:
                continue
            for v in E.vertices:
                report.cases += 1
                data = surgery(tau, v)
                if not surgery_sign_holds(tau, data):
                    report.failures.append(("sign", mapping, v))
                if not surgery_kernel_holds(tau, data, K):
                    report.failures.append(("kernel", mapping, v))
                if reconstruct(data) != tau:
                    report.failures.append(("round-trip", mapping, v))
        logger.info("surgery audit on %s: %d cases, %d failures", sizes, report.cases, len(report.failures))
        reports.append(report)

    if check in ("bijection", "all"):
        report = AuditReport("bijection", sizes)
        stars = {v: E.star(v) for v in E.vertices}
        for sigma in full_cycles(E.vertices):
            for entries in itertools.product(*stars.values()):
                eta = dict(zip(E.vertices, entries))
                for offsets in itertools.product(*(range(s) for s in sizes)):
                    alpha = dict(zip(E.vertices, offsets))
                    if any(_prescribed_exit(E, u, eta[u], alpha[u]) is None for u in E.vertices):
                        continue
                    for v in E.vertices:
                        report.cases += 1
                        if not omega_bijection_check(E, eta, sigma, alpha, v):
                            report.failures.append((sigma, eta, alpha, v))
        logger.info("bijection audit on %s: %d cases, %d failures", sizes, report.cases, len(report.failures))
        reports.append(report)
    return reports


if __name__ == "__main__":
    E = StarSet.from_sizes((2, 2))
    print("connected permutations of 2x2:", sum(1 for _ in enum_connected(E)), "of", math.factorial(4))
    for report in audit((3, 3)):
        print(report.to_dict())
