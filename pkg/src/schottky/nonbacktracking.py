"""Non-backtracking operator ``B(s)`` and its tangle-free path decomposition.

Half-edge ``e = (x, i)`` owns the subspace ``H(D_conj(i)) (x) C x``; in the
``(disc, degree, sheet)`` indexing that is disc ``conj(i)``, sheet ``x``.

Paths of ``l + 1`` half-edges are enumerated color word by color word: for a
fixed color sequence all ``n**(l+1)`` vertex sequences are handled as one
array, so tangle tests and weights are vectorized.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .bergman import BasisSpec, BlockOperator, Discretization
from .covers import (CoverSample, build_colored_graph, contrast_basis, is_tangle_free,
                     permutation_matrices, sample_symmetric)
from .geometry import SchottkyData, enumerate_words
from .transfer import transfer_matrix

log = logging.getLogger(__name__)

PATH_CAP = 10**7
BLOCK_CAP = 10**4


class PathCapError(RuntimeError):
    pass


class TangledSampleError(ValueError):
    """The decomposition identity is only asserted on tangle-free samples."""


@dataclass(frozen=True)
class GraphStats:
    v: int
    e: int
    e1: int

    @property
    def rank(self) -> int:
        return self.e - self.v + 1


# -- basic operators ------------------------------------------------------------

def _disc_projector(disc: Discretization, k: int) -> np.ndarray:
    P = np.zeros(disc.dim)
    P[disc.sl(k)] = 1.0
    return P


def assemble_b(disc: Discretization, S: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``b(s) = sum_j A_j(s) (x) S_j``: the transfer operator on ``H(D) (x) C^n``."""
    return sum(np.kron(A[j], S[j]) for j in range(len(S)))


def assemble_B_matrix(disc: Discretization, S: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``B_ef = 1{i != conj j} S_i[x, y] p_e (A_j (x) E_xy) p_f``.

    Since ``A_j`` vanishes on disc ``j``, summing over ``j`` first gives
    ``B = sum_i (rows of disc conj(i) of sum_j A_j) (x) S_i``.
    """
    a = A.sum(axis=0)
    d = len(S) // 2
    return sum(np.kron(_disc_projector(disc, (i + d) % (2 * d))[:, None] * a, S[i]) for i in range(len(S)))


def conjugator(disc: Discretization, S: np.ndarray) -> np.ndarray:
    """``Q = sum_k 1_{disc k} (x) S_k``; a permutation matrix."""
    return sum(np.kron(np.diag(_disc_projector(disc, k)), S[k]) for k in range(len(S)))


def k0_basis(disc: Discretization, n: int) -> np.ndarray:
    """Orthonormal columns spanning ``H(D) (x) V_n^0``."""
    return np.kron(np.eye(disc.dim), contrast_basis(n).T)


def assemble_B(data: SchottkyData, sample: CoverSample, s, spec: BasisSpec = BasisSpec()) -> BlockOperator:
    disc = Discretization(data, spec)
    S = permutation_matrices(sample).S
    return disc.operator(assemble_B_matrix(disc, S, disc.A_all(s)), sheets=sample.n)


def conjugation_check(data: SchottkyData, sample: CoverSample, s, spec: BasisSpec = BasisSpec(),
                      ells=(1, 2, 3)) -> dict:
    """``||Q^-1 b Q - B||`` plus the norm transfer ``||L^l_{rho_n^0}|| = ||B^l|K_0||``."""
    disc = Discretization(data, spec)
    pm = permutation_matrices(sample)
    A = disc.A_all(s)
    b = assemble_b(disc, pm.S, A)
    B = assemble_B_matrix(disc, pm.S, A)
    Q = conjugator(disc, pm.S)
    residual = float(np.linalg.norm(Q.T @ b @ Q - B, 2))
    out = {"residual": residual, "norm_transfer": {}}
    if sample.n > 1:
        W = k0_basis(disc, sample.n)
        L0 = transfer_matrix(A, pm.rho_n0)
        for ell in ells:
            a = np.linalg.norm(np.linalg.matrix_power(L0, ell), 2)
            c = np.linalg.norm(np.linalg.matrix_power(B, ell) @ W, 2)
            out["norm_transfer"][ell] = {"L": float(a), "B_K0": float(c), "rel_err": float(abs(a - c) / max(a, 1e-300))}
    return out


# -- path enumeration -------------------------------------------------------------

def path_count(n: int, d: int, ell: int) -> int:
    return n * 2 * d * ((2 * d - 1) * n) ** ell


def _check_cap(n, d, ell, cap):
    if path_count(n, d, ell) > cap:
        raise PathCapError(f"{path_count(n, d, ell)} paths for n={n}, ell={ell} exceeds cap {cap}")


def _n_distinct(a: np.ndarray) -> np.ndarray:
    if a.shape[1] == 0:
        return np.zeros(len(a), dtype=int)
    s = np.sort(a, axis=1)
    return 1 + np.sum(s[:, 1:] != s[:, :-1], axis=1)


def _n_singletons(a: np.ndarray) -> np.ndarray:
    if a.shape[1] == 0:
        return np.zeros(len(a), dtype=int)
    s = np.sort(a, axis=1)
    pad = np.full((len(a), 1), -1)
    ne_prev = np.concatenate([pad, s[:, :-1]], axis=1) != s
    ne_next = np.concatenate([s[:, 1:], pad], axis=1) != s
    return np.sum(ne_prev & ne_next, axis=1)


def _edge_codes(colors, X, n, d):
    """Canonical integer code of edge ``[x_t, i_t, x_{t+1}]`` for each step."""
    c = np.asarray(colors[:-1])
    cb = (c + d) % (2 * d)
    fwd = (c * n + X[:, :-1]) * n + X[:, 1:]
    bwd = (cb * n + X[:, 1:]) * n + X[:, :-1]
    return np.minimum(fwd, bwd)


def _tangle_free(codes, X, a, b):
    """Tangle-freeness of the sub-path of half-edges ``a .. b-1``."""
    v = _n_distinct(X[:, a:b])
    e = _n_distinct(codes[:, a:b - 1])
    return e - v + 1 <= 1


class PathBlock:
    """All non-backtracking paths with one fixed color word."""

    def __init__(self, colors, n, d, X):
        self.colors = tuple(colors)
        self.X = X
        self.codes = _edge_codes(self.colors, X, n, d)
        self.ell = len(colors) - 1

    def tangle_free(self):
        return _tangle_free(self.codes, self.X, 0, self.ell + 1)

    def k_split(self, k):
        """First ``k`` half-edges and last ``l - k + 1`` half-edges both tangle-free."""
        return _tangle_free(self.codes, self.X, 0, k) & _tangle_free(self.codes, self.X, k, self.ell + 1)

    def stats(self):
        return (_n_distinct(self.X), _n_distinct(self.codes), _n_singletons(self.codes))


def path_blocks(n: int, d: int, ell: int, cap: int = PATH_CAP):
    _check_cap(n, d, ell, cap)
    X = np.array(list(itertools.product(range(n), repeat=ell + 1)), dtype=np.int64).reshape(-1, ell + 1)
    for colors in enumerate_words(d, ell + 1):
        yield PathBlock(colors, n, d, X)


def enumerate_paths(sample: CoverSample, ell: int, cls="all", cap: int = PATH_CAP):
    """Stream ``(path, GraphStats)`` for non-backtracking paths of ``ell + 1``
    half-edges; ``cls`` is ``"all"``, ``"tangle_free"`` or ``("k_split", k)``."""
    n, d = sample.n, sample.d
    for blk in path_blocks(n, d, ell, cap):
        if cls == "all":
            mask = np.ones(len(blk.X), dtype=bool)
        elif cls == "tangle_free":
            mask = blk.tangle_free()
        elif isinstance(cls, tuple) and cls[0] == "k_split":
            mask = blk.k_split(int(cls[1]))
        else:
            raise ValueError(f"unknown path class {cls!r}")
        v, e, e1 = blk.stats()
        for r in np.nonzero(mask)[0]:
            path = tuple(zip(blk.X[r].tolist(), blk.colors))
            yield path, GraphStats(int(v[r]), int(e[r]), int(e1[r]))


def _step_weights(M, colors, X, ts):
    w = np.ones(len(X))
    for t in ts:
        w = w * M[colors[t]][X[:, t], X[:, t + 1]]
    return w


def _aggregate(w, X, n):
    return np.bincount(X[:, 0] * n + X[:, -1], weights=w, minlength=n * n).reshape(n, n)


@dataclass
class PathOperators:
    Bbar: np.ndarray
    R: list  # R[k-1] is R_k
    n: int
    ell: int
    blocks: int


def assemble_path_operators(data: SchottkyData, sample: CoverSample, s, spec: BasisSpec = BasisSpec(),
                            ell: int = 1, cap: int = PATH_CAP, A=None, disc=None) -> PathOperators:
    """Tangle-free path sum ``Bbar^(l)`` and remainders ``R_k^(l)``, ``k = 1..l``.

    Paths are grouped by color word and end vertices; each color word's
    ``A(s)_{hat i}`` is formed once and placed with the aggregated weights.
    """
    disc = Discretization(data, spec) if disc is None else disc
    A = disc.A_all(s) if A is None else A
    pm = permutation_matrices(sample)
    n, d = sample.n, sample.d
    dim = disc.dim * n
    Bbar = np.zeros((dim, dim), dtype=complex)
    R = [np.zeros((dim, dim), dtype=complex) for _ in range(ell)]
    n_blocks = 0
    for blk in path_blocks(n, d, ell, cap):
        c, X = blk.colors, blk.X
        Y = _disc_projector(disc, (c[0] + d) % (2 * d))[:, None] * disc.word_product(c[1:], s, A)
        tf = blk.tangle_free()
        W = _aggregate(np.where(tf, _step_weights(pm.S_centered, c, X, range(ell)), 0.0), X, n)
        Bbar += np.kron(Y, W)
        n_blocks += 1
        for k in range(1, ell + 1):
            mask = blk.k_split(k) & ~tf
            if not mask.any():
                continue
            w = _step_weights(pm.S_centered, c, X[mask], range(k - 1)) \
                * _step_weights(pm.S, c, X[mask], range(k, ell))
            R[k - 1] += np.kron(Y, _aggregate(w, X[mask], n))
            n_blocks += 1
        if n_blocks > BLOCK_CAP:
            raise PathCapError(f"more than {BLOCK_CAP} aggregated blocks")
    return PathOperators(Bbar, R, n, ell, n_blocks)


def path_sum_power(data: SchottkyData, sample: CoverSample, s, spec: BasisSpec = BasisSpec(), ell: int = 1):
    """``B(s)^l`` rebuilt as the S-weighted sum over all non-backtracking paths."""
    disc = Discretization(data, spec)
    A = disc.A_all(s)
    pm = permutation_matrices(sample)
    n, d = sample.n, sample.d
    out = np.zeros((disc.dim * n,) * 2, dtype=complex)
    for blk in path_blocks(n, d, ell):
        c = blk.colors
        Y = _disc_projector(disc, (c[0] + d) % (2 * d))[:, None] * disc.word_product(c[1:], s, A)
        out += np.kron(Y, _aggregate(_step_weights(pm.S, c, blk.X, range(ell)), blk.X, n))
    return out


def naive_path_operators(data: SchottkyData, sample: CoverSample, s, spec: BasisSpec, ell: int):
    """Per-path accumulation of ``Bbar`` and ``R_k`` (no grouping); small cases only."""
    disc = Discretization(data, spec)
    A = disc.A_all(s)
    pm = permutation_matrices(sample)
    n, d = sample.n, sample.d
    M1 = disc.M1
    dim = disc.dim * n
    Bbar = np.zeros((dim, dim), dtype=complex)
    R = [np.zeros((dim, dim), dtype=complex) for _ in range(ell)]
    tf_set = {p for p, _ in enumerate_paths(sample, ell, "tangle_free")}
    k_sets = [{p for p, _ in enumerate_paths(sample, ell, ("k_split", k))} for k in range(1, ell + 1)]
    cache = {}
    for path, _ in enumerate_paths(sample, ell, "all"):
        xs = [x for x, _ in path]
        cs = tuple(i for _, i in path)
        if cs not in cache:
            cache[cs] = disc.word_product(cs[1:], s, A)
        src, dst = (cs[0] + d) % (2 * d), (cs[-1] + d) % (2 * d)
        block = cache[cs][src * M1:(src + 1) * M1, dst * M1:(dst + 1) * M1]
        rows = np.arange(src * M1, (src + 1) * M1) * n + xs[0]
        cols = np.arange(dst * M1, (dst + 1) * M1) * n + xs[-1]
        if path in tf_set:
            w = np.prod([pm.S_centered[cs[t]][xs[t], xs[t + 1]] for t in range(ell)])
            Bbar[np.ix_(rows, cols)] += w * block
        else:
            for k in range(1, ell + 1):
                if path in k_sets[k - 1]:
                    w = np.prod([pm.S_centered[cs[t]][xs[t], xs[t + 1]] for t in range(k - 1)]) \
                        * np.prod([pm.S[cs[t]][xs[t], xs[t + 1]] for t in range(k, ell)])
                    R[k - 1][np.ix_(rows, cols)] += w * block
    return Bbar, R


# -- identities ----------------------------------------------------------------------

@dataclass
class DecompositionResult:
    residual: float
    probe: str
    tangle_free: bool


def decomposition_residual(data: SchottkyData, sample: CoverSample, s, spec: BasisSpec = BasisSpec(),
                           ell: int = 1, max_full_dim: int = 2000, seed: int = 0) -> DecompositionResult:
    """``max ||(B^l - Bbar + (1/n) sum_k R_k) F|| / ||F||`` over probes ``F`` in ``K_0``.

    Raises :class:`TangledSampleError` if the cover graph is ``l``-tangled.
    """
    if not is_tangle_free(build_colored_graph(sample), ell):
        raise TangledSampleError(f"sample is {ell}-tangled; identity not asserted")
    disc = Discretization(data, spec)
    A = disc.A_all(s)
    pm = permutation_matrices(sample)
    B = assemble_B_matrix(disc, pm.S, A)
    ops = assemble_path_operators(data, sample, s, spec, ell, A=A, disc=disc)
    n = sample.n
    D = np.linalg.matrix_power(B, ell) - ops.Bbar + sum(ops.R) / n
    W = k0_basis(disc, n)
    if W.shape[1] <= max_full_dim:
        probe, F = "basis", W
    else:
        rng = np.random.default_rng(seed)
        F = W @ rng.standard_normal((W.shape[1], 64))
        F /= np.linalg.norm(F, axis=0)
        probe = "random64"
    return DecompositionResult(float(np.max(np.linalg.norm(D @ F, axis=0))), probe, True)


@dataclass
class HighTraceResult:
    direct: float
    path_sum: complex
    rel_err: float
    norm_sq: float


def high_trace_crosscheck(data: SchottkyData, sample: CoverSample, s, spec: BasisSpec = BasisSpec(),
                          ell: int = 1, m: int = 1, allow_large_m: bool = False) -> HighTraceResult:
    """``tr((Bbar Bbar^*)^m)`` directly and as a sum over tuples of tangle-free
    paths with matched boundary half-edges.

    For ``m = 1`` the path sum runs over pairs ``(g1, g2)`` sharing both end
    half-edges, each contributing ``w(g1) w(g2) tr[A_{hat i(g1)} A_{hat i(g2)}^*]``
    restricted to the first disc.
    """
    if m > 1 and not allow_large_m:
        raise ValueError("m > 1 requires allow_large_m=True")
    disc = Discretization(data, spec)
    A = disc.A_all(s)
    pm = permutation_matrices(sample)
    n, d = sample.n, sample.d
    ops = assemble_path_operators(data, sample, s, spec, ell, A=A, disc=disc)
    G = ops.Bbar @ ops.Bbar.conj().T
    direct = complex(np.trace(np.linalg.matrix_power(G, m)))
    norm_sq = float(np.linalg.norm(ops.Bbar, 2) ** 2)

    # per-path weights grouped by boundary half-edges (x1, i1, x_last, i_last)
    M1 = disc.M1
    groups = {}
    words = {}
    for blk in path_blocks(n, d, ell):
        c = blk.colors
        tf = blk.tangle_free()
        w = _step_weights(pm.S_centered, c, blk.X, range(ell))
        words[c] = disc.word_product(c[1:], s, A)
        for r in np.nonzero(tf)[0]:
            x = blk.X[r]
            groups.setdefault((int(x[0]), c[0], int(x[-1]), c[-1]), []).append((c, w[r]))
    if m == 1:
        total = 0j
        tr_cache = {}
        for (x1, i1, xl, il), items in groups.items():
            r0 = (i1 + d) % (2 * d)
            rs = slice(r0 * M1, (r0 + 1) * M1)
            for c1, w1 in items:
                for c2, w2 in items:
                    key = (c1, c2)
                    if key not in tr_cache:
                        tr_cache[key] = np.trace(words[c1][rs] @ words[c2][rs].conj().T)
                    total += w1 * w2 * tr_cache[key]
    else:
        # boundary-indexed blocks X_ef, then cyclic products over half-edge sequences
        Xb = {}
        for (x1, i1, xl, il), items in groups.items():
            r0, c0 = (i1 + d) % (2 * d), (il + d) % (2 * d)
            Xb[(x1, i1), (xl, il)] = sum(w * words[c][r0 * M1:(r0 + 1) * M1, c0 * M1:(c0 + 1) * M1]
                                         for c, w in items)
        heads = sorted({e for e, _ in Xb})
        tails = sorted({f for _, f in Xb})
        total = 0j
        for seq in itertools.product(heads, tails, repeat=m):
            es, fs = seq[0::2], seq[1::2]
            P = np.eye(M1, dtype=complex)
            ok = True
            for k in range(m):
                a = Xb.get((es[k], fs[k]))
                b = Xb.get((es[(k + 1) % m], fs[k]))
                if a is None or b is None:
                    ok = False
                    break
                P = P @ a @ b.conj().T
            if ok:
                total += np.trace(P)
    rel = abs(direct - total) / max(abs(direct), 1e-300)
    return HighTraceResult(float(direct.real), complex(total), float(rel), norm_sq)


# -- experiments ---------------------------------------------------------------------

def norm_trend_experiment(data: SchottkyData, n_list, ell_rule, s, spec: BasisSpec = BasisSpec(6, 64),
                          trials: int = 5, seed: int = 0, cap: int = PATH_CAP):
    """Rows ``{n, trial, ell, tangle_free, bbar_norm, max_rk_norm, sum_rk_norm, bl_k0_norm}``.

    ``ell_rule`` maps ``n`` to the path length (e.g. ``lambda n: 2``).
    Rows whose path count exceeds ``cap`` are skipped with a log notice.
    """
    rows = []
    disc = Discretization(data, spec)
    A = disc.A_all(s)
    for n in n_list:
        ell = int(ell_rule(n))
        if path_count(n, data.d, ell) > cap:
            log.warning("skipping n=%d, ell=%d: path cap", n, ell)
            continue
        for t in range(trials):
            sample = sample_symmetric(n, data.d, seed, trial=n * 100003 + t)
            pm = permutation_matrices(sample)
            tf = bool(is_tangle_free(build_colored_graph(sample), ell))
            L0 = transfer_matrix(A, pm.rho_n0)
            bl = float(np.linalg.norm(np.linalg.matrix_power(L0, ell), 2))
            ops = assemble_path_operators(data, sample, s, spec, ell, cap=cap, A=A, disc=disc)
            rk = [float(np.linalg.norm(R, 2)) for R in ops.R]
            rows.append({"n": n, "trial": t, "seed": seed, "ell": ell, "tangle_free": tf,
                         "bbar_norm": float(np.linalg.norm(ops.Bbar, 2)),
                         "max_rk_norm": max(rk), "sum_rk_norm": sum(rk), "bl_k0_norm": bl})
    return rows
