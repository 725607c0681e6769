"""Twisted transfer operators, Fredholm determinants and resonance scans."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .bergman import BasisSpec, BlockOperator, Discretization
from .geometry import SchottkyData

log = logging.getLogger(__name__)


class RepresentationError(ValueError):
    pass


class ScanError(RuntimeError):
    """A cell contour passed through (or too near) a zero twice in a row."""


@dataclass(frozen=True)
class Representation:
    """Unitary images ``rho(g_i)`` of the generators, shape ``(2d, m, m)``."""

    images: np.ndarray = field(repr=False)
    d: int

    def __post_init__(self):
        imgs = np.asarray(self.images)
        object.__setattr__(self, "images", imgs)
        if imgs.ndim != 3 or imgs.shape[0] != 2 * self.d or imgs.shape[1] != imgs.shape[2]:
            raise RepresentationError("images must have shape (2d, m, m)")

    @property
    def dimension(self) -> int:
        return self.images.shape[1]

    def check(self, tol: float = 1e-12) -> float:
        """Largest unitarity / inverse-pairing defect; raises above ``tol``."""
        I = np.eye(self.dimension)
        err = 0.0
        for i, U in enumerate(self.images):
            j = (i + self.d) % (2 * self.d)
            err = max(err, np.max(np.abs(U.conj().T @ U - I)), np.max(np.abs(self.images[j] @ U - I)))
        if err > tol:
            raise RepresentationError(f"representation defect {err:.3g}")
        return float(err)


def trivial_rep(d: int, dim: int = 1) -> Representation:
    return Representation(np.broadcast_to(np.eye(dim), (2 * d, dim, dim)).copy(), d)


def transfer_matrix(A: np.ndarray, rep: Representation) -> np.ndarray:
    """``sum_k A_k (x) rho(g_k)``; the source disc of ``A_k`` is ``conj(k)``,
    so this is the term ``g_conj(k)'^s rho(g_conj(k)^-1) f o g_conj(k)``."""
    if rep.dimension == 1:
        return np.einsum("kab,k->ab", A, rep.images[:, 0, 0])
    return sum(np.kron(A[k], rep.images[k]) for k in range(A.shape[0]))


class TransferFamily:
    """``s -> L_{s, rho}`` for a fixed surface, representation and basis."""

    def __init__(self, data: SchottkyData, rep: Representation, spec: BasisSpec = BasisSpec()):
        if rep.d != data.d:
            raise RepresentationError("representation and surface disagree on d")
        self.data, self.rep, self.spec = data, rep, spec
        self.disc = Discretization(data, spec)

    def matrix(self, s) -> np.ndarray:
        return transfer_matrix(self.disc.A_all(s), self.rep)

    def operator(self, s) -> BlockOperator:
        return self.disc.operator(self.matrix(s), sheets=self.rep.dimension)

    def logdet(self, s) -> complex:
        """``log det(1 - L_s)`` (branch of the imaginary part is arbitrary)."""
        L = self.matrix(s)
        sign, logabs = np.linalg.slogdet(np.eye(L.shape[0]) - L)
        return complex(logabs + np.log(sign))

    def det(self, s) -> complex:
        return complex(np.exp(self.logdet(s)))


def assemble_transfer(data: SchottkyData, s, rep: Representation, spec: BasisSpec = BasisSpec()) -> BlockOperator:
    return TransferFamily(data, rep, spec).operator(s)


def fredholm_det(data: SchottkyData, s, rep: Representation = None, spec: BasisSpec = BasisSpec()) -> complex:
    rep = trivial_rep(data.d) if rep is None else rep
    return TransferFamily(data, rep, spec).det(s)


def operator_power_norm(data: SchottkyData, s, rep: Representation, spec: BasisSpec, ell: int) -> float:
    if ell < 1:
        raise ValueError("ell must be >= 1")
    L = TransferFamily(data, rep, spec).matrix(s)
    return float(np.linalg.norm(np.linalg.matrix_power(L, ell), 2))


def leading_eigenvalue(data: SchottkyData, s, spec: BasisSpec = BasisSpec()) -> complex:
    ev = np.linalg.eigvals(TransferFamily(data, trivial_rep(data.d), spec).matrix(s))
    return complex(ev[np.argmax(np.abs(ev))])


# -- argument principle on a grid ---------------------------------------------------

@dataclass
class ResonanceReport:
    rectangle: tuple[float, float, float, float]
    grid: np.ndarray = field(repr=False)
    zeros: list[tuple[complex, int]]
    degree_cap: int
    re_nodes: np.ndarray = field(repr=False, default=None)
    im_nodes: np.ndarray = field(repr=False, default=None)

    def to_dict(self, include_grid: bool = True) -> dict:
        out = {
            "rectangle": list(self.rectangle),
            "degree_cap": self.degree_cap,
            "grid_shape": list(self.grid.shape),
            "zeros": [{"re": z.real, "im": z.imag, "winding": int(w)} for z, w in self.zeros],
        }
        if include_grid:
            out["grid"] = {"re": self.grid.real.tolist(), "im": self.grid.imag.tolist()}
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw))

    def grid_csv(self) -> str:
        """Rows ``re(s),im(s),re(det),im(det)``."""
        lines = ["re_s,im_s,re_det,im_det"]
        for a, x in enumerate(self.re_nodes):
            for b, y in enumerate(self.im_nodes):
                v = self.grid[a, b]
                lines.append(f"{x!r},{y!r},{v.real!r},{v.imag!r}")
        return "\n".join(lines) + "\n"


def _edge_increment(f, a, b, fa, fb, floor, depth=0, max_depth=12):
    """Change of ``arg f`` along the segment ``a -> b``, subdividing while a
    single step exceeds pi/2."""
    step = np.angle(fb / fa)
    if abs(step) <= np.pi / 2 or depth >= max_depth:
        if abs(step) > np.pi / 2:
            log.warning("argument step %.2f not resolved on edge %s -> %s", step, a, b)
        return step
    m = 0.5 * (a + b)
    fm = f(m)
    if abs(fm) < floor:
        raise ScanError(f"contour passes within {floor} of a zero near {m}")
    return (_edge_increment(f, a, m, fa, fm, floor, depth + 1, max_depth)
            + _edge_increment(f, m, b, fm, fb, floor, depth + 1, max_depth))


def grid_winding(f, re_nodes, im_nodes, values=None, floor: float = 1e-12):
    """Values of ``f`` on the node grid and the winding number of every cell.

    ``values[a, b] = f(re[a] + i im[b])``; ``winding[a, b]`` belongs to the cell
    with lower-left node ``(a, b)``.
    """
    S = re_nodes[:, None] + 1j * im_nodes[None, :]
    if values is None:
        values = np.array([[f(s) for s in row] for row in S])
    if np.min(np.abs(values)) < floor:
        raise ScanError("grid node within floor of a zero")
    nx, ny = S.shape
    # horizontal edges (a,b)->(a+1,b) and vertical edges (a,b)->(a,b+1)
    H = np.array([[_edge_increment(f, S[a, b], S[a + 1, b], values[a, b], values[a + 1, b], floor)
                   for b in range(ny)] for a in range(nx - 1)])
    V = np.array([[_edge_increment(f, S[a, b], S[a, b + 1], values[a, b], values[a, b + 1], floor)
                   for b in range(ny - 1)] for a in range(nx)])
    total = H[:, :-1] + V[1:, :] - H[:, 1:] - V[:-1, :]
    return values, np.rint(total / (2 * np.pi)).astype(int)


def newton_zero(f, s0, step: float = 1e-6, tol: float = 1e-10, maxiter: int = 50):
    s = complex(s0)
    for _ in range(maxiter):
        fs = f(s)
        df = (f(s + step) - f(s - step)) / (2 * step)
        if df == 0:
            break
        ds = fs / df
        s -= ds
        if abs(ds) < tol:
            return s, True
    return s, False


def resonance_scan(data: SchottkyData, rect, grid_shape=(64, 64), rep: Representation = None,
                   spec: BasisSpec = BasisSpec(16), confirm_spec: BasisSpec = BasisSpec(24, 128)) -> ResonanceReport:
    """Locate zeros of ``det(1 - L_{s, rho})`` in ``rect = (re_lo, re_hi, im_lo, im_hi)``.

    Cells with nonzero winding are reported with that winding as multiplicity;
    the location is Newton-refined at ``confirm_spec`` from the cell centre.
    """
    re_lo, re_hi, im_lo, im_hi = map(float, rect)
    nx, ny = grid_shape
    if nx < 8 or ny < 8:
        raise ValueError("grid must be at least 8x8")
    if re_lo <= 0:
        raise ValueError("rectangle must lie in Re(s) > 0")
    rep = trivial_rep(data.d) if rep is None else rep
    fam = TransferFamily(data, rep, spec)
    re_nodes = np.linspace(re_lo, re_hi, nx)
    im_nodes = np.linspace(im_lo, im_hi, ny)
    try:
        values, wind = grid_winding(fam.det, re_nodes, im_nodes)
    except ScanError:
        # one perturbation of the interior nodes, then give up
        hx, hy = (re_hi - re_lo) / (nx - 1), (im_hi - im_lo) / (ny - 1)
        re_nodes = re_nodes + np.r_[0, np.full(nx - 2, 0.137 * hx), 0]
        im_nodes = im_nodes + np.r_[0, np.full(ny - 2, 0.113 * hy), 0]
        values, wind = grid_winding(fam.det, re_nodes, im_nodes)
    fine = TransferFamily(data, rep, confirm_spec)
    zeros = []
    for a, b in zip(*np.nonzero(wind)):
        lo = complex(re_nodes[a], im_nodes[b])
        hi = complex(re_nodes[a + 1], im_nodes[b + 1])
        centre = 0.5 * (lo + hi)
        s, ok = newton_zero(fine.det, centre)
        inside = (lo.real - 1e-9 <= s.real <= hi.real + 1e-9) and (lo.imag - 1e-9 <= s.imag <= hi.imag + 1e-9)
        if not (ok and inside):
            log.info("Newton did not settle inside cell %s; reporting centre", (a, b))
            s = centre
        zeros.append((s, int(wind[a, b])))
    return ResonanceReport((re_lo, re_hi, im_lo, im_hi), values, zeros, spec.degree_cap, re_nodes, im_nodes)


# -- norm variation -------------------------------------------------------------------

def variation_ratios(data: SchottkyData, pairs, rep: Representation = None, spec: BasisSpec = BasisSpec(),
                     ells=(1, 2, 3)) -> np.ndarray:
    """``||L_s^l - L_{s0}^l|| / |s - s0|`` for each ``(s, s0)`` pair (rows) and ``l`` (columns)."""
    rep = trivial_rep(data.d) if rep is None else rep
    fam = TransferFamily(data, rep, spec)
    out = np.zeros((len(pairs), len(ells)))
    for a, (s, s0) in enumerate(pairs):
        L, L0 = fam.matrix(s), fam.matrix(s0)
        for b, ell in enumerate(ells):
            D = np.linalg.matrix_power(L, ell) - np.linalg.matrix_power(L0, ell)
            out[a, b] = np.linalg.norm(D, 2) / abs(s - s0)
    return out


def fit_lipschitz_constant(ratios: np.ndarray, ells=(1, 2, 3)) -> dict:
    """Per-length roots ``ratio^(1/l)`` and the running fit ``C_0(L) = max_{l <= L}``
    of those roots: the smallest constant with ``ratio_l <= C_0^l`` for all ``l <= L``."""
    ells = np.asarray(ells)
    roots = np.max(ratios, axis=0) ** (1.0 / ells)
    running = np.maximum.accumulate(roots)
    return {"ells": ells.tolist(), "roots": roots.tolist(), "C0": running.tolist(),
            "spread": float(running.max() / running.min() - 1.0)}
