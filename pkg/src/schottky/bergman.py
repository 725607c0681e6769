"""Bergman-space discretization of the composition operators ``A_i(s)``.

Each disc ``D_k`` carries the orthonormal monomial basis

    phi_p(z) = sqrt((p + 1) / pi) * r_k**-(p + 1) * (z - c_k)**p,   p = 0..M

and operators are stored as dense matrices indexed by ``(disc, degree)``
flattened as ``disc * (M + 1) + degree``. Galerkin entries are obtained by
sampling the image function on the boundary circle of the target disc and
reading off Taylor coefficients with an FFT.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import Disc, SchottkyData, check_word, log_derivative, mirror, mobius


class AliasingWarning(RuntimeWarning):
    pass


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class BasisSpec:
    degree_cap: int = 16
    quadrature_points: int = 128

    def __post_init__(self):
        if self.degree_cap < 0:
            raise ValueError("degree_cap must be >= 0")
        if self.quadrature_points < 4 * (self.degree_cap + 1):
            raise ValueError("quadrature_points must be at least 4 * (degree_cap + 1)")

    @property
    def size(self) -> int:
        return self.degree_cap + 1


@dataclass(frozen=True)
class BlockOperator:
    """Dense operator on ``H(D) (x) C^sheets`` with index ``(disc, degree, sheet)``."""

    matrix: np.ndarray = field(repr=False)
    n_discs: int
    basis_size: int
    sheets: int = 1

    @property
    def shape(self):
        return self.matrix.shape

    def index(self, disc, degree=slice(None), sheet=slice(None)):
        idx = np.arange(self.matrix.shape[0]).reshape(self.n_discs, self.basis_size, self.sheets)
        return idx[disc, degree, sheet].ravel()

    def block(self, target_disc: int, source_disc: int) -> np.ndarray:
        return self.matrix[np.ix_(self.index(target_disc), self.index(source_disc))]

    def disc_pattern(self, tol: float = 0.0) -> np.ndarray:
        """Boolean ``(n_discs, n_discs)`` map of nonzero (target, source) blocks."""
        k = self.basis_size * self.sheets
        A = np.abs(self.matrix).reshape(self.n_discs, k, self.n_discs, k)
        return A.max(axis=(1, 3)) > tol

    def with_matrix(self, matrix) -> "BlockOperator":
        return BlockOperator(matrix, self.n_discs, self.basis_size, self.sheets)


# -- kernel and basis -------------------------------------------------------

def bergman_kernel_eval(disc: Disc, z, w):
    """Bergman kernel of a disc: ``r^2 / (pi (r^2 - conj(w - c)(z - c))^2)``."""
    c, r = disc.center, disc.radius
    den = r * r - np.conj(np.asarray(w) - c) * (np.asarray(z) - c)
    if np.any(den == 0):
        raise ZeroDivisionError("Bergman kernel pole")
    return r * r / (np.pi * den**2)


def basis_eval(disc: Disc, z, degree_cap: int) -> np.ndarray:
    """Values ``phi_p(z)`` for ``p = 0..degree_cap``; shape ``z.shape + (M+1,)``."""
    p = np.arange(degree_cap + 1)
    u = (np.asarray(z, dtype=complex)[..., None] - disc.center) / disc.radius
    return np.sqrt((p + 1) / np.pi) / disc.radius * u**p


def boundary_points(disc: Disc, Q: int) -> np.ndarray:
    return disc.center + disc.radius * np.exp(2j * np.pi * np.arange(Q) / Q)


def _coefficient_scale(disc: Disc, degree_cap: int) -> np.ndarray:
    p = np.arange(degree_cap + 1)
    return disc.radius * np.sqrt(np.pi / (p + 1))


def basis_project(disc: Disc, samples, degree_cap: int, warn: bool = True) -> np.ndarray:
    """Coordinates in the disc's orthonormal basis of a function holomorphic near
    the closed disc, from its values at ``boundary_points(disc, Q)``.

    ``samples`` may carry trailing axes; the first axis runs over boundary points.
    """
    samples = np.asarray(samples, dtype=complex)
    Q = samples.shape[0]
    F = np.fft.fft(samples, axis=0) / Q
    if warn:
        top = np.sum(np.abs(F[3 * Q // 4:]) ** 2)
        total = np.sum(np.abs(F) ** 2)
        if total > 0 and top > 1e-20 * total:
            warnings.warn(f"aliasing: top-quarter relative mass {np.sqrt(top / total):.2e}", AliasingWarning)
    scale = _coefficient_scale(disc, degree_cap).reshape((-1,) + (1,) * (samples.ndim - 1))
    return F[: degree_cap + 1] * scale


# -- disc quadrature ----------------------------------------------------------

def disc_quadrature(disc: Disc, n_radial: int, n_angular: int):
    """Nodes and weights on a disc: Gauss-Legendre in radius times the periodic
    trapezoid rule in angle."""
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    rho = 0.5 * disc.radius * (x + 1)
    wr = 0.5 * disc.radius * wx * rho
    th = 2 * np.pi * np.arange(n_angular) / n_angular
    z = disc.center + rho[:, None] * np.exp(1j * th)[None, :]
    w = wr[:, None] * np.full(n_angular, 2 * np.pi / n_angular)[None, :]
    return z.ravel(), w.ravel()


def reproduce(disc: Disc, f, z, n_radial: int = None, n_angular: int = None):
    """``int_D B(z, w) f(w) dm(w)`` by disc quadrature, for each point in ``z``.

    The kernel series in ``q = |z - c| / r`` aliases under the angular rule at
    order ``q^n_angular``; by default the node counts are chosen from the
    largest ``q`` so that this stays below double precision.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    q = min(float(np.max(np.abs(z - disc.center))) / disc.radius, 0.99)
    need = 64 if q < 0.5 else int(np.ceil(np.log(1e-17) / np.log(q))) + 16
    n_angular = max(64, need) if n_angular is None else n_angular
    n_radial = max(20, n_angular // 2 + 8) if n_radial is None else n_radial
    nodes, weights = disc_quadrature(disc, n_radial, n_angular)
    K = bergman_kernel_eval(disc, z[:, None], nodes[None, :])
    return K @ (weights * f(nodes))


# -- operator assembly ------------------------------------------------------------

class Discretization:
    """Cached boundary data for assembling ``A_i(s)`` at many ``s``.

    For each letter ``i`` and target disc ``j != i`` it stores, on the boundary
    samples ``x`` of ``D_j``, the log-derivative of ``g_conj(i)`` and the source
    basis evaluated at ``g_conj(i)(x)``.
    """

    def __init__(self, data: SchottkyData, spec: BasisSpec = BasisSpec()):
        self.data = data
        self.spec = spec
        self.m = data.n_letters
        self.M1 = spec.size
        Q = spec.quadrature_points
        self._logder = {}
        self._basis = {}
        for i in range(self.m):
            src = data.conj(i)
            G = data.generators[src]
            for j in range(self.m):
                if j == i:
                    continue
                x = boundary_points(data.discs[j], Q)
                self._logder[i, j] = log_derivative(G, x)
                self._basis[i, j] = basis_eval(data.discs[src], mobius(G, x), spec.degree_cap)
        self._scale = [_coefficient_scale(D, spec.degree_cap) for D in data.discs]

    @property
    def dim(self) -> int:
        return self.m * self.M1

    def sl(self, disc: int) -> slice:
        return slice(disc * self.M1, (disc + 1) * self.M1)

    def A_matrix(self, i: int, s: complex) -> np.ndarray:
        M1 = self.M1
        out = np.zeros((self.dim, self.dim), dtype=complex)
        src = self.sl(self.data.conj(i))
        for j in range(self.m):
            if j == i:
                continue
            vals = np.exp(s * self._logder[i, j])[:, None] * self._basis[i, j]
            F = np.fft.fft(vals, axis=0)[:M1] / vals.shape[0]
            out[self.sl(j), src] = F * self._scale[j][:, None]
        return out

    def A_all(self, s: complex) -> np.ndarray:
        """Stack of ``A_i(s)`` matrices, shape ``(2d, dim, dim)``."""
        return np.stack([self.A_matrix(i, s) for i in range(self.m)])

    def word_product(self, word, s, A=None) -> np.ndarray:
        """Galerkin product ``A_{w_1} ... A_{w_l}`` (identity for the empty word)."""
        A = self.A_all(s) if A is None else A
        P = np.eye(self.dim, dtype=complex)
        for a in word:
            P = P @ A[a]
        return P

    def operator(self, matrix, sheets=1) -> BlockOperator:
        return BlockOperator(matrix, self.m, self.M1, sheets)


def _word_weight_and_image(data: SchottkyData, word, s, x):
    """``exp(-s tau^(l)(g_mirror(w) x))`` and ``g_mirror(w) x`` on points ``x``."""
    z = np.asarray(x, dtype=complex)
    logw = np.zeros_like(z)
    for a in word:
        G = data.generators[data.conj(a)]
        logw = logw + log_derivative(G, z)
        z = mobius(G, z)
    return np.exp(s * logw), z


def assemble_A(data: SchottkyData, i: int, s: complex, spec: BasisSpec = BasisSpec()) -> BlockOperator:
    disc = Discretization(data, spec)
    return disc.operator(disc.A_matrix(i, s))


def assemble_word(data: SchottkyData, word, s: complex, spec: BasisSpec = BasisSpec()) -> BlockOperator:
    """Direct Galerkin assembly of ``A(s)_w`` (not via matrix products)."""
    word = check_word(word, data.d)
    if not word:
        raise ValueError("empty word")
    m, M1, Q = data.n_letters, spec.size, spec.quadrature_points
    src = data.conj(word[-1])
    out = np.zeros((m * M1, m * M1), dtype=complex)
    for j in range(m):
        if j == word[0]:
            continue
        D = data.discs[j]
        x = boundary_points(D, Q)
        wgt, img = _word_weight_and_image(data, word, s, x)
        vals = wgt[:, None] * basis_eval(data.discs[src], img, spec.degree_cap)
        out[j * M1:(j + 1) * M1, src * M1:(src + 1) * M1] = basis_project(D, vals, spec.degree_cap, warn=False)
    return BlockOperator(out, m, M1, 1)


def word_kernel(data: SchottkyData, word, s: complex):
    """Integral kernel ``K_w(z, w)`` of ``A(s)_w`` as a vectorized callable."""
    word = tuple(word)
    c, r = data.centers, data.radii

    def K(z, w):
        z = np.asarray(z, dtype=complex)
        outside = np.abs(z - c[word[0]]) >= r[word[0]]
        wgt, img = _word_weight_and_image(data, word, s, z)
        return np.where(outside, wgt * bergman_D(data, img, w), 0)

    return K


def bergman_D(data: SchottkyData, z, w):
    """Kernel of the disc union: zero unless ``z`` and ``w`` share a disc."""
    z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
    out = np.zeros(z.shape, dtype=complex)
    for D in data.discs:
        both = (np.abs(z - D.center) < D.radius) & (np.abs(w - D.center) < D.radius)
        if np.any(both):
            out[both] = bergman_kernel_eval(D, z[both], w[both])
    return out


def product_kernel_diagonal(data: SchottkyData, iword, jword, s: complex):
    """Diagonal ``K(z, z)`` of the kernel of ``A(s)_i A(s)_j^*``.

    Composing the two kernels and applying the reproducing property leaves
    ``1{z not in D_i1} 1{w not in D_j1} W_i(z) conj(W_j(w)) B(g z, g' w)``.
    """
    c, r = data.centers, data.radii
    iword, jword = tuple(iword), tuple(jword)

    def K(z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        ok = (np.abs(z - c[iword[0]]) >= r[iword[0]]) & (np.abs(w - c[jword[0]]) >= r[jword[0]])
        wi, zi = _word_weight_and_image(data, iword, s, z)
        wj, wj_img = _word_weight_and_image(data, jword, s, w)
        return np.where(ok, wi * np.conj(wj) * bergman_D(data, zi, wj_img), 0)

    return K


# -- traces ---------------------------------------------------------------------------

def trace_of(op) -> complex:
    M = op.matrix if isinstance(op, BlockOperator) else np.asarray(op)
    return complex(np.trace(M))


def trace_via_kernel(kernel, discs, n_radial: int = 24, n_angular: int = 64, rtol: float = 1e-6) -> complex:
    """``int_D K(z, z) dm(z)`` over the union of ``discs``.

    The rule is repeated with doubled node counts; a relative change above
    ``rtol`` triggers a :class:`QuadratureWarning`. The finer value is returned.
    """

    def integrate(nr, nt):
        total = 0j
        for D in discs:
            z, w = disc_quadrature(D, nr, nt)
            total += np.sum(w * kernel(z, z))
        return total

    coarse = integrate(n_radial, n_angular)
    fine = integrate(2 * n_radial, 2 * n_angular)
    if abs(fine - coarse) > rtol * max(abs(fine), 1e-300):
        warnings.warn(f"kernel trace not converged: change {abs(fine - coarse):.2e}", QuadratureWarning)
    return complex(fine)


def assemble_adjoint_quadrature(data: SchottkyData, i: int, s: complex, spec: BasisSpec = BasisSpec(),
                                n_radial: int = 32, n_angular: int = 96) -> np.ndarray:
    """Galerkin matrix of ``A_i(s)^*`` from its kernel formula, by area quadrature.

    Entry ``(p on disc conj(i), q on disc j)`` is
    ``int_{D_j} conj(W(z) phi_p(g z)) phi_q(z) dm(z)`` with ``g = g_conj(i)``.
    """
    m, M1 = data.n_letters, spec.size
    src = data.conj(i)
    out = np.zeros((m * M1, m * M1), dtype=complex)
    for j in range(m):
        if j == i:
            continue
        D = data.discs[j]
        z, w = disc_quadrature(D, n_radial, n_angular)
        wgt, img = _word_weight_and_image(data, (i,), s, z)
        left = np.conj(wgt[:, None] * basis_eval(data.discs[src], img, spec.degree_cap))
        right = basis_eval(D, z, spec.degree_cap)
        out[src * M1:(src + 1) * M1, j * M1:(j + 1) * M1] = (left * w[:, None]).T @ right
    return out


# -- trace-product bound --------------------------------------------------------------

def _random_pair(rng, d: int, lengths):
    """Two reduced words with a common last letter (so ``A_i A_j^*`` can be nonzero)."""
    m = 2 * d

    def word(L, last=None):
        while True:
            w = [int(rng.integers(m))]
            for _ in range(L - 1):
                w.append(int(rng.choice([a for a in range(m) if a != (w[-1] + d) % m])))
            if last is None or w[-1] == last:
                return tuple(w)

    i = word(int(rng.choice(lengths)))
    return i, word(int(rng.choice(lengths)), i[-1])


def trace_product_samples(data: SchottkyData, r: float, n_tuples: int, lengths=(1, 2, 3), m_max: int = 3,
                          seed: int = 0, spec: BasisSpec = BasisSpec(), t_range: float = 0.5):
    """Ratios ``(|tr(A_i1 A_j1^* ... A_im A_jm^*)| / prod Upsilon^r)^(1/m)`` for random tuples.

    ``s = r + it`` with ``t`` uniform in ``[-t_range, t_range]``; ``m`` uniform in ``1..m_max``.
    Returns a list of dicts with the tuple, ``s``, trace, bound product and ratio.
    """
    from .geometry import interval_length

    rng = np.random.default_rng(seed)
    disc = Discretization(data, spec)
    rows = []
    while len(rows) < n_tuples:
        m = int(rng.integers(1, m_max + 1))
        s = complex(r, rng.uniform(-t_range, t_range))
        A = disc.A_all(s)
        pairs = [_random_pair(rng, data.d, lengths) for _ in range(m)]
        P = np.eye(disc.dim, dtype=complex)
        ups = 1.0
        for i, j in pairs:
            P = P @ disc.word_product(i, s, A) @ disc.word_product(j, s, A).conj().T
            ups *= (interval_length(data, i) * interval_length(data, j)) ** r
        tr = complex(np.trace(P))
        if abs(tr) == 0.0:
            continue
        rows.append({"pairs": pairs, "s": s, "m": m, "trace": tr, "upsilon": ups,
                     "ratio": (abs(tr) / ups) ** (1.0 / m)})
    return rows


def fit_trace_constant(rows) -> float:
    """Smallest ``C`` with ``|tr| <= C^m prod Upsilon^r`` on ``rows``."""
    return float(max(row["ratio"] for row in rows))
