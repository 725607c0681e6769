"""Random symmetric permutation tuples, their matrices and colored graphs.

Permutations are arrays ``sigma[i]`` with ``sigma[i][x]`` the image of vertex
``x`` (vertices ``0 .. n-1``). The permutation matrix convention is
``S_i[x, y] = 1`` iff ``sigma_i(x) = y``; the representation used for twisting
sends the generator ``g_i`` to ``S_i``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .transfer import Representation


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based stream for ``(seed, *keys)``; order independent."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1), *map(int, keys)])))


@dataclass(frozen=True)
class CoverSample:
    n: int
    d: int
    sigma: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=np.int64)
        sig.setflags(write=False)
        object.__setattr__(self, "sigma", sig)
        if sig.shape != (2 * self.d, self.n):
            raise ValueError("sigma must have shape (2d, n)")
        for i in range(self.d):
            if not np.array_equal(np.sort(sig[i]), np.arange(self.n)):
                raise ValueError(f"sigma[{i}] is not a permutation")
            if not np.array_equal(sig[i + self.d][sig[i]], np.arange(self.n)):
                raise ValueError(f"sigma[{i + self.d}] is not the inverse of sigma[{i}]")


def symmetric_from(perms, seed: int = 0) -> CoverSample:
    """Complete ``d`` permutations to a symmetric ``2d``-tuple."""
    perms = np.asarray(perms, dtype=np.int64)
    d, n = perms.shape
    inv = np.empty_like(perms)
    for i in range(d):
        inv[i][perms[i]] = np.arange(n)
    return CoverSample(n, d, np.concatenate([perms, inv]), seed)


def sample_symmetric(n: int, d: int, seed: int, trial: int = 0) -> CoverSample:
    """``d`` independent uniform permutations (Fisher-Yates on a per-generator
    Philox stream) completed by their inverses."""
    if n < 1:
        raise ValueError("n must be >= 1")
    perms = [trial_rng(seed, trial, i).permutation(n) for i in range(d)]
    return symmetric_from(perms, seed)


def identity_cover(n: int, d: int) -> CoverSample:
    return symmetric_from(np.tile(np.arange(n), (d, 1)))


def contrast_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the sum-zero subspace, as rows:
    ``v_k = (k e_{k+1} - sum_{j<=k} e_j) / sqrt(k (k+1))`` for ``k = 1..n-1``."""
    U = np.zeros((n - 1, n))
    for k in range(1, n):
        U[k - 1, :k] = -1.0
        U[k - 1, k] = k
        U[k - 1] /= np.sqrt(k * (k + 1))
    return U


@dataclass(frozen=True)
class PermutationMatrices:
    S: np.ndarray
    S_centered: np.ndarray
    rho_n: Representation
    rho_n0: Representation


def permutation_matrices(sample: CoverSample) -> PermutationMatrices:
    n, m = sample.n, 2 * sample.d
    S = np.zeros((m, n, n))
    for i in range(m):
        S[i, np.arange(n), sample.sigma[i]] = 1.0
    Sc = S - 1.0 / n
    U = contrast_basis(n)
    rho0 = np.einsum("ab,kbc,dc->kad", U, S, U) if n > 1 else np.zeros((m, 0, 0))
    return PermutationMatrices(S, Sc, Representation(S, sample.d), Representation(rho0, sample.d))


# -- colored graphs --------------------------------------------------------------

@dataclass(frozen=True)
class ColoredGraph:
    """Vertex set plus colored edges, each stored as the lexicographically
    smaller of its two representatives ``(i, x, y)`` and ``(conj i, y, x)``."""

    vertices: frozenset
    edges: tuple  # sorted canonical triples (i, x, y)
    d: int

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def canonical_edge(x: int, i: int, y: int, d: int) -> tuple[int, int, int]:
    j = (i + d) % (2 * d)
    return min((i, x, y), (j, y, x))


def build_colored_graph(sample: CoverSample) -> ColoredGraph:
    d = sample.d
    edges = sorted({canonical_edge(x, i, int(sample.sigma[i][x]), d)
                    for i in range(d) for x in range(sample.n)})
    return ColoredGraph(frozenset(range(sample.n)), tuple(edges), d)


def graph_from_edges(edges, d: int, vertices=None) -> ColoredGraph:
    canon = sorted({canonical_edge(x, i, y, d) for (x, i, y) in edges})
    if vertices is None:
        vertices = {v for e in canon for v in e[1:]}
    return ColoredGraph(frozenset(vertices), tuple(canon), d)


def cycle_rank(n_vertices: int, n_edges: int, n_components: int) -> int:
    return n_edges - n_vertices + n_components


def is_graph_tangle_free(graph: ColoredGraph) -> bool:
    """At most one independent cycle (loops and parallel edges count)."""
    verts = set(graph.vertices) | {v for e in graph.edges for v in e[1:]}
    parent = {v: v for v in verts}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    comps = len(verts)
    for _, x, y in graph.edges:
        a, b = find(x), find(y)
        if a != b:
            parent[a] = b
            comps -= 1
    return cycle_rank(len(verts), len(graph.edges), comps) <= 1


def ball(graph: ColoredGraph, x: int, ell: int) -> ColoredGraph:
    """Edges and vertices on paths of length at most ``ell`` starting at ``x``."""
    adj = {}
    for e in graph.edges:
        _, u, v = e
        adj.setdefault(u, []).append((v, e))
        adj.setdefault(v, []).append((u, e))
    dist = {x: 0}
    queue = deque([x])
    edges = set()
    while queue:
        u = queue.popleft()
        if dist[u] >= ell:
            continue
        for v, e in adj.get(u, ()):
            edges.add(e)
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return ColoredGraph(frozenset(dist), tuple(sorted(edges)), graph.d)


@dataclass(frozen=True)
class TangleResult:
    tangle_free: bool
    witness: int | None = None  # first vertex whose ball has two cycles
    witness_rank: int = 0

    def __bool__(self):
        return self.tangle_free


def is_tangle_free(graph: ColoredGraph, ell: int) -> TangleResult:
    """Breadth-first ball at every vertex; tangle-free iff each ball has cycle
    rank (edges - vertices + 1) at most one."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    for x in sorted(graph.vertices):
        B = ball(graph, x, ell)
        rank = cycle_rank(len(B.vertices), len(B.edges), 1)
        if rank > 1:
            return TangleResult(False, x, rank)
    return TangleResult(True)


def ball_cycle_ranks(sample: CoverSample, ell: int) -> np.ndarray:
    """Cycle rank of the radius-``ell`` ball around every vertex, vectorized.

    Same ball rule as :func:`ball`: vertices at distance ``<= ell`` and edges
    with an endpoint at distance ``<= ell - 1``.
    """
    n, d = sample.n, sample.d
    xs = np.tile(np.arange(n), d)
    ys = sample.sigma[:d].ravel()
    adj = np.zeros((n, n), dtype=bool)
    adj[xs, ys] = True
    adj |= adj.T
    reach = np.eye(n, dtype=bool)  # reach[x, v]: dist(x, v) <= k
    for _ in range(ell - 1):
        reach = reach | ((reach.astype(np.int32) @ adj.astype(np.int32)) > 0)
    n_edge = np.sum(reach[:, xs] | reach[:, ys], axis=1)
    reach = reach | ((reach.astype(np.int32) @ adj.astype(np.int32)) > 0)
    return n_edge - np.sum(reach, axis=1) + 1


def sample_is_tangle_free(sample: CoverSample, ell: int) -> bool:
    return bool(np.all(ball_cycle_ranks(sample, ell) <= 1))
