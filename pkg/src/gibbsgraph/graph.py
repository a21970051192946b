"""Finite rooted graphs, the path metric, and the degree-weighted sums built on it."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels

DEFAULT_PATH_BUDGET = 10**7


class GraphError(ValueError):
    """Raised for malformed graphs or invalid vertex ids."""


class BudgetExceeded(RuntimeError):
    """Simple-path enumeration ran out of node expansions.

    ``partial`` holds the per-length path counts gathered before the budget ran out.
    """

    def __init__(self, message, expansions, partial):
        super().__init__(message)
        self.expansions = expansions
        self.partial = partial


class Graph:
    """Connected simple undirected graph on vertices ``0..V-1`` with a root.

    Adjacency is stored in CSR form (``indptr``, ``indices``) with sorted neighbour
    lists. The graph is immutable; BFS tables are cached per source under a lock.
    """

    def __init__(self, num_vertices: int, edges, root: int = 0):
        num_vertices = int(num_vertices)
        if num_vertices < 2:
            raise GraphError("need at least two vertices (every degree must be >= 1)")
        if not 0 <= root < num_vertices:
            raise GraphError(f"root {root} out of range")
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= num_vertices):
            raise GraphError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphError("self-loops are not allowed")
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        keys = lo * num_vertices + hi
        if np.unique(keys).size != keys.size:
            raise GraphError("duplicate edge")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        self.num_vertices = num_vertices
        self.root = int(root)
        self.indices = dst
        self.indptr = np.zeros(num_vertices + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=num_vertices), out=self.indptr[1:])
        self.degrees = np.diff(self.indptr)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        self.degrees.setflags(write=False)
        by_key = np.argsort(keys)
        self._edges = np.stack([lo[by_key], hi[by_key]], axis=1)
        self._cache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()
        if np.any(self.degrees == 0):
            raise GraphError("isolated vertex")
        if np.any(self.distances(self.root) < 0):
            raise GraphError("graph is not connected")

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def neighbors(self, x: int) -> np.ndarray:
        self._check(x)
        return self.indices[self.indptr[x] : self.indptr[x + 1]]

    def degree(self, x: int) -> int:
        self._check(x)
        return int(self.degrees[x])

    def _check(self, x):
        if not (isinstance(x, (int, np.integer)) and 0 <= x < self.num_vertices):
            raise GraphError(f"unknown vertex {x!r}")

    def distances(self, x: int) -> np.ndarray:
        """BFS distance table from ``x`` (read-only array indexed by vertex)."""
        self._check(x)
        x = int(x)
        with self._lock:
            hit = self._cache.get(x)
        if hit is not None:
            return hit
        dist = _disk_cache_load(self, x)
        if dist is None:
            dist = kernels.bfs(self.indptr, self.indices, x)
            _disk_cache_store(self, x, dist)
        dist.setflags(write=False)
        with self._lock:
            self._cache.setdefault(x, dist)
            return self._cache[x]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64([self.num_vertices, self.root]).tobytes())
        h.update(np.ascontiguousarray(self._edges).tobytes())
        return h.hexdigest()

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "edges": self._edges.tolist(),
            "num_vertices": self.num_vertices,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        try:
            return cls(data["num_vertices"], data["edges"], data["root"])
        except KeyError as exc:
            raise GraphError(f"graph JSON missing field {exc}") from None

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Graph":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_root(self, root: int) -> "Graph":
        return Graph(self.num_vertices, self._edges, root)

    def __repr__(self):
        return f"Graph(V={self.num_vertices}, E={self.num_edges}, root={self.root})"


def _disk_cache_path(g, x):
    base = os.environ.get("GIBBSGRAPH_CACHE_DIR")
    if not base:
        return None
    return Path(base) / f"{g.digest()[:24]}_{x}.npy"


def _disk_cache_load(g, x):
    path = _disk_cache_path(g, x)
    if path is None or not path.exists():
        return None
    dist = np.load(path)
    return dist if dist.shape == (g.num_vertices,) else None


def _disk_cache_store(g, x, dist):
    path = _disk_cache_path(g, x)
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
    with open(tmp, "wb") as fh:
        np.save(fh, dist, allow_pickle=False)
    os.replace(tmp, path)


# -- basic shapes used throughout the tests and CLI ---------------------------

def path_graph(n: int, root: int = 0) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)], root)


def cycle_graph(n: int, root: int = 0) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)], root)


def star_graph(leaves: int, root: int = 0) -> Graph:
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)], root)


# -- metric -------------------------------------------------------------------

def bfs_distances(g: Graph, x: int) -> np.ndarray:
    return g.distances(x)


def sphere(g: Graph, x: int, n: int) -> np.ndarray:
    return np.flatnonzero(g.distances(x) == n)


def ball(g: Graph, x: int, n: int) -> np.ndarray:
    return np.flatnonzero(g.distances(x) <= n)


def eccentricity(g: Graph, x: int) -> int:
    return int(g.distances(x).max())


def diameter(g: Graph) -> int:
    return max(eccentricity(g, x) for x in range(g.num_vertices))


# -- weights and Randic-type sums --------------------------------------------

def weights(g: Graph, alpha: float) -> np.ndarray:
    """w_alpha(x) = exp(-alpha * rho(root, x)) for every vertex."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return np.exp(-alpha * g.distances(g.root))


def weight_w_alpha(g: Graph, alpha: float, x: int) -> float:
    g._check(x)
    return float(math.exp(-alpha * int(g.distances(g.root)[x])))


def randic_all(g: Graph, theta: float) -> np.ndarray:
    """m_theta(x) = sum over neighbours y of [n(x) n(y)]^theta, for every x."""
    deg = g.degrees.astype(float)
    owner = np.repeat(np.arange(g.num_vertices), g.degrees)
    terms = (deg[owner] * deg[g.indices]) ** theta
    return np.bincount(owner, weights=terms, minlength=g.num_vertices)


def randic_m_theta(g: Graph, theta: float, x: int) -> float:
    nx = g.degree(x)
    return math.fsum((nx * int(g.degrees[y])) ** theta for y in g.neighbors(x))


@dataclass
class WeightedSumLedger:
    """Per-radius increments of the summability sum and their running total."""

    alpha: float
    theta: float
    increments: list[float] = field(default_factory=list)

    @property
    def total(self) -> float:
        return math.fsum(self.increments)

    def cumulative(self) -> list[float]:
        out, acc = [], []
        for inc in self.increments:
            acc.append(inc)
            out.append(math.fsum(acc))
        return out

    def tail_rate(self) -> float:
        """Least-squares slope of log(increment) against radius (nan if < 2 points)."""
        radii = [n for n, v in enumerate(self.increments) if v > 0]
        if len(radii) < 2:
            return float("nan")
        y = np.log([self.increments[n] for n in radii])
        return float(np.polyfit(radii, y, 1)[0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["radius", "increment", "cumulative"])
            for n, (inc, cum) in enumerate(zip(self.increments, self.cumulative())):
                w.writerow([n, repr(inc), repr(cum)])


def theta_sum(g: Graph, alpha: float, theta: float) -> WeightedSumLedger:
    if alpha <= 0 or theta <= 0:
        raise ValueError("alpha and theta must be positive")
    dist = g.distances(g.root)
    m = randic_all(g, theta)
    ledger = WeightedSumLedger(alpha, theta)
    order = np.argsort(dist, kind="stable")
    cuts = np.searchsorted(dist[order], np.arange(int(dist.max()) + 2))
    for n in range(len(cuts) - 1):
        shell = m[order[cuts[n] : cuts[n + 1]]]
        ledger.increments.append(math.fsum(shell) * math.exp(-alpha * n))
    return ledger


def t_x_sum(g: Graph, alpha: float, theta: float, x: int) -> float:
    """T_x = sum over y of n(y)^(1+theta) exp(-alpha rho(x, y))."""
    dist = g.distances(x)
    return math.fsum(g.degrees.astype(float) ** (1.0 + theta) * np.exp(-alpha * dist))


def sphere_degree_sum(g: Graph, theta: float, n: int, x: int) -> float:
    """G_theta(N, x): sum of n(y)^(1+theta) over the sphere of radius N around x."""
    deg = g.degrees[sphere(g, x, n)].astype(float)
    return math.fsum(deg ** (1.0 + theta))


# -- simple paths -------------------------------------------------------------

@dataclass(frozen=True)
class PathCensus:
    counts: np.ndarray          # counts[k] = number of simple paths of length k from x
    max_degree_product: np.ndarray
    expansions: int


def path_census(g: Graph, x: int, nmax: int, budget: int = DEFAULT_PATH_BUDGET) -> PathCensus:
    """Enumerate every simple path of length <= ``nmax`` starting at ``x``.

    ``max_degree_product[k]`` is the largest product of degrees over the vertices of a
    length-k path other than its far endpoint (1 for k = 0, 0 when no such path exists).
    """
    g._check(x)
    if nmax < 0:
        raise ValueError("path length must be >= 0")
    counts, maxprod, expansions, done = kernels.path_census(
        g.indptr, g.indices, g.degrees, int(x), int(nmax), int(budget))
    if not done:
        raise BudgetExceeded(
            f"simple-path enumeration from {x} exceeded {budget} expansions",
            int(expansions), counts.copy())
    return PathCensus(counts, maxprod, int(expansions))


def simple_path_census(g: Graph, x: int, n: int, budget: int = DEFAULT_PATH_BUDGET):
    """(number of simple paths of length ``n`` from ``x``, max degree product)."""
    census = path_census(g, x, n, budget)
    return int(census.counts[n]), float(census.max_degree_product[n])


def tempered_norm(omega, p: float, alpha: float, g: Graph) -> float:
    """Weighted l^p norm [sum |omega(x)|^p w_alpha(x)]^(1/p)."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (g.num_vertices,):
        raise ValueError("configuration must assign a value to every vertex")
    return math.fsum(np.abs(omega) ** p * weights(g, alpha)) ** (1.0 / p)
