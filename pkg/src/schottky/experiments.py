"""Experiment drivers behind the command line: configs, resonance scans of the
base surface and of random covers, tangle Monte Carlo and the identity suite."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .bergman import (BasisSpec, Discretization, assemble_adjoint_quadrature, product_kernel_diagonal,
                      reproduce, trace_via_kernel)
from .covers import (build_colored_graph, identity_cover, is_tangle_free, permutation_matrices, sample_is_tangle_free,
                     sample_symmetric)
from .geometry import SchottkyData, load_schottky, reference_config, schottky_from_dict, validate_schottky
from .thermo import hausdorff_dimension
from .transfer import (ResonanceReport, ScanError, grid_winding, newton_zero, resonance_scan, transfer_matrix)
from . import nonbacktracking as nb

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass
class ExperimentConfig:
    schottky: object = "reference"  # "reference", a JSON path, or an inline dict
    rectangle: tuple = (0.1, 0.9, -0.5, 0.5)
    grid: tuple = (64, 64)
    degree_cap: int = 12
    n_values: tuple = (4, 8, 16, 32)
    trials: int = 200
    seed: int = 0
    beta: float = 0.5
    net_spacing: float = 0.02
    margin: float = 0.02
    s: object = 0.7
    ell: int = 1
    depth: int = 12
    tol: float = 1e-10
    force_identity: bool = False  # test hook: identity permutations
    corrupt_generator: bool = False  # test hook: perturb one generator entry
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rectangle = tuple(float(x) for x in self.rectangle)
        self.grid = tuple(int(x) for x in self.grid)
        self.n_values = tuple(int(x) for x in self.n_values)
        if len(self.rectangle) != 4 or len(self.grid) != 2:
            raise ConfigError("rectangle needs 4 numbers and grid 2 integers")
        lo, hi, ilo, ihi = self.rectangle
        if not (lo < hi and ilo < ihi):
            raise ConfigError("rectangle must be (re_lo, re_hi, im_lo, im_hi) with lo < hi")
        if self.degree_cap < 1 or self.trials < 1 or self.net_spacing <= 0:
            raise ConfigError("degree_cap, trials and net_spacing must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.s = _complex(self.s)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if isinstance(obj.get("schottky"), str) and obj["schottky"] != "reference":
            p = Path(obj["schottky"])
            if not p.is_absolute():
                obj["schottky"] = str(Path(path).parent / p)
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["s"] = [self.s.real, self.s.imag]
        return out

    def data(self) -> SchottkyData:
        src = self.schottky
        if src == "reference":
            data = reference_config()
        elif isinstance(src, dict):
            data = schottky_from_dict(src)
        else:
            data = load_schottky(src)
        if self.corrupt_generator:
            G = data.generators.copy()
            G[0, 0, 1] += 1e-3
            data = SchottkyData(data.d, data.discs, G)
        return data

    def spec(self) -> BasisSpec:
        return BasisSpec(self.degree_cap, max(64, 4 * (self.degree_cap + 1)))


# -- base surface -----------------------------------------------------------------

def run_base_resonances(cfg: ExperimentConfig, data: SchottkyData = None) -> tuple[ResonanceReport, dict]:
    """Trivial-representation scan plus the comparison of the rightmost real zero with ``delta``."""
    data = cfg.data() if data is None else data
    rep = resonance_scan(data, cfg.rectangle, cfg.grid, spec=cfg.spec())
    delta = hausdorff_dimension(data, cfg.depth, cfg.tol).delta
    real = [z.real for z, _ in rep.zeros if abs(z.imag) < 1e-6]
    summary = {"delta": delta, "n_zeros": len(rep.zeros),
               "rightmost_real_zero": max(real) if real else None,
               "delta_gap": abs(max(real) - delta) if real else None}
    return rep, summary


# -- cover determinants -------------------------------------------------------------

def _perm_sign(p: np.ndarray) -> int:
    seen = np.zeros(len(p), dtype=bool)
    sign = 1
    for a in range(len(p)):
        if seen[a]:
            continue
        length = 0
        b = a
        while not seen[b]:
            seen[b] = True
            b = p[b]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


class NewZeroDeterminant:
    """``s -> det(1 - L_{s, rho_n^0})`` for one cover, computed as
    ``det(1 - L_{s, rho_n}) / det(1 - L_{s, triv})``.

    The permutation twist is block sparse (sheet-major, four nonzero blocks per
    block row), so a sparse LU is much cheaper than a dense determinant of the
    ``(n - 1)``-sheet matrix. ``triv_cache`` may be shared between covers.
    """

    def __init__(self, disc: Discretization, sigma: np.ndarray, triv_cache: dict = None):
        self.disc = disc
        self.n = sigma.shape[1]
        self.triv_cache = {} if triv_cache is None else triv_cache
        m, M1, dim = disc.m, disc.M1, disc.dim
        rows, cols, self._slices = [], [], []
        d = m // 2
        pos = self.n * dim
        for k in range(m):
            tr = np.array([a for a in range(dim) if a // M1 != k])
            src = (k + d) % m
            sc = np.arange(src * M1, (src + 1) * M1)
            rr, cc = np.meshgrid(tr, sc, indexing="ij")
            x = np.arange(self.n)
            y = sigma[k]
            rows.append((x[:, None] * dim + rr.ravel()[None, :]).ravel())
            cols.append((y[:, None] * dim + cc.ravel()[None, :]).ravel())
            self._slices.append((tr, sc, pos, pos + rows[-1].size))
            pos += rows[-1].size
        eye = np.arange(self.n * dim)
        self._rows = np.concatenate([eye] + rows)
        self._cols = np.concatenate([eye] + cols)
        self._size = self.n * dim

    def _triv(self, s, A):
        key = complex(s)
        if key not in self.triv_cache:
            sign, la = np.linalg.slogdet(np.eye(self.disc.dim) - A.sum(axis=0))
            self.triv_cache[key] = (complex(sign), float(la))
        return self.triv_cache[key]

    def log_parts(self, s):
        """``(phase factor, log|det|)`` of the new-zero determinant."""
        A = self.disc.A_all(s)
        vals = [np.ones(self._size, dtype=complex)]
        for k, (tr, sc, _, _) in enumerate(self._slices):
            vals.append(np.tile(-A[k][np.ix_(tr, sc)].ravel(), self.n))
        M = sp.csc_matrix((np.concatenate(vals), (self._rows, self._cols)), shape=(self._size,) * 2)
        lu = splu(M, permc_spec="COLAMD")
        u = lu.U.diagonal()
        if np.any(u == 0):
            return 0j, -np.inf
        phase = np.prod(u / np.abs(u)) * _perm_sign(lu.perm_r) * _perm_sign(lu.perm_c)
        ts, tl = self._triv(s, A)
        return complex(phase / ts), float(np.sum(np.log(np.abs(u))) - tl)

    def __call__(self, s) -> complex:
        ph, la = self.log_parts(s)
        return ph * np.exp(la) if np.isfinite(la) else 0j


def dense_new_det(disc: Discretization, sample, s) -> complex:
    """Reference route: dense determinant on the ``n - 1`` non-constant sheets."""
    L = transfer_matrix(disc.A_all(s), permutation_matrices(sample).rho_n0)
    return complex(np.linalg.det(np.eye(len(L)) - L))


def _conj_symmetric(f):
    """Real centres and real permutation matrices give ``f(conj s) = conj f(s)``."""
    cache = {}

    def g(s):
        s = complex(s)
        if s.imag < 0:
            return np.conj(g(s.conjugate()))
        key = (round(s.real, 14), round(s.imag, 14))
        if key not in cache:
            cache[key] = f(s)
        return cache[key]

    return g


def net_nodes(rect, spacing: float):
    """Uniform grid of spacing at most ``spacing`` covering ``rect`` (edges included)."""
    lo, hi, ilo, ihi = rect
    nx = max(2, int(math.ceil((hi - lo) / spacing - 1e-12)) + 1)
    ny = max(2, int(math.ceil((ihi - ilo) / spacing - 1e-12)) + 1)
    return np.linspace(lo, hi, nx), np.linspace(ilo, ihi, ny)


def ell_for(n: int, beta: float) -> int:
    return max(1, int(math.floor(beta * math.log(n))))


def cover_trial(disc, sample, re_nodes, im_nodes, triv_cache=None, floor: float = 1e-12) -> dict:
    f = _conj_symmetric(NewZeroDeterminant(disc, np.asarray(sample.sigma), triv_cache))
    symmetric = np.allclose(im_nodes, -im_nodes[::-1])
    g = f if symmetric else (lambda s: f(s))
    out = {"new_zero_found": False, "zeros": [], "error": None}
    try:
        values, wind = grid_winding(g, re_nodes, im_nodes, floor=floor)
        out["min_abs_det"] = float(np.min(np.abs(values)))
        for a, b in zip(*np.nonzero(wind)):
            centre = complex(0.5 * (re_nodes[a] + re_nodes[a + 1]), 0.5 * (im_nodes[b] + im_nodes[b + 1]))
            z, ok = newton_zero(g, centre)
            out["zeros"].append({"re": z.real, "im": z.imag, "winding": int(wind[a, b]), "newton_converged": ok})
        out["new_zero_found"] = bool(np.any(wind != 0))
    except ScanError as exc:
        # the determinant essentially vanishes on the net: a zero sits there
        out["error"] = str(exc)
        out["new_zero_found"] = True
        out["min_abs_det"] = 0.0
    return out


def check_cover_rectangle(cfg: ExperimentConfig, data: SchottkyData) -> dict:
    """Guard: ``re_lo > delta/2 + margin`` and no base zero within ``margin`` of the rectangle."""
    delta = hausdorff_dimension(data, cfg.depth, cfg.tol).delta
    lo, hi, ilo, ihi = cfg.rectangle
    if lo <= delta / 2 + cfg.margin:
        raise PreconditionError(f"re_lo={lo} must exceed delta/2 + margin = {delta / 2 + cfg.margin:.6f}")
    m = cfg.margin
    rect = (max(lo - m, 1e-3), hi + m, ilo - m, ihi + m)
    gx = max(8, int(math.ceil((rect[1] - rect[0]) / cfg.net_spacing)) + 1)
    gy = max(8, int(math.ceil((rect[3] - rect[2]) / cfg.net_spacing)) + 1)
    base = resonance_scan(data, rect, (gx, gy), spec=cfg.spec(), confirm_spec=cfg.spec())
    if base.zeros:
        raise PreconditionError(f"base-surface zeros near the rectangle: {[z for z, _ in base.zeros]}")
    return {"delta": delta, "guard_rectangle": rect}


def run_cover_experiment(cfg: ExperimentConfig, threads: int = 1, data: SchottkyData = None):
    """Rows per ``(n, trial)`` plus a per-``n`` summary; see :func:`frequency_trend`."""
    data = cfg.data() if data is None else data
    guard = check_cover_rectangle(cfg, data)
    disc = Discretization(data, cfg.spec())
    re_nodes, im_nodes = net_nodes(cfg.rectangle, cfg.net_spacing)
    triv_cache = {}

    def one(n, t):
        sample = identity_cover(n, data.d) if cfg.force_identity else sample_symmetric(n, data.d, cfg.seed, trial=t + (n << 32))
        ell = ell_for(n, cfg.beta)
        row = {"n": n, "trial": t, "seed": cfg.seed, "ell": ell}
        try:
            res = cover_trial(disc, sample, re_nodes, im_nodes, triv_cache)
            row.update(res)
        except Exception as exc:  # logged, run continues
            log.error("trial n=%d t=%d failed: %s", n, t, exc)
            row.update({"new_zero_found": None, "min_abs_det": None, "error": repr(exc)})
        row["tangle_free"] = sample_is_tangle_free(sample, ell)
        row["event_A"] = row["tangle_free"]
        return row

    jobs = [(n, t) for n in cfg.n_values for t in range(cfg.trials)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(lambda job: one(*job), jobs))
    else:
        rows = [one(*job) for job in jobs]
    rows.sort(key=lambda r: (r["n"], r["trial"]))
    summary = frequency_trend(rows)
    summary.update(guard)
    summary["net_shape"] = [len(re_nodes), len(im_nodes)]
    return rows, summary


def frequency_trend(rows) -> dict:
    """Per-``n`` new-zero frequency with binomial standard error, and whether
    consecutive frequencies are non-increasing within two standard errors."""
    per = {}
    for r in rows:
        if r.get("new_zero_found") is None:
            continue
        per.setdefault(r["n"], []).append(bool(r["new_zero_found"]))
    ns = sorted(per)
    stats = {}
    for n in ns:
        k, N = sum(per[n]), len(per[n])
        p = k / N
        stats[n] = {"trials": N, "new_zeros": k, "freq": p, "se": math.sqrt(p * (1 - p) / N)}
    ok = True
    for a, b in zip(ns, ns[1:]):
        sa, sb = stats[a], stats[b]
        if sb["freq"] - sa["freq"] > 2 * math.hypot(sa["se"], sb["se"]):
            ok = False
    return {"per_n": stats, "nonincreasing_2sigma": ok}


# -- tangle Monte Carlo --------------------------------------------------------------------

def run_tangle_mc(cfg: ExperimentConfig, d: int = None) -> dict:
    d = cfg.data().d if d is None else d
    ell = cfg.ell
    scale = ell**3 * (2 * d - 1) ** (4 * ell)
    per = {}
    for n in cfg.n_values:
        if ell > math.sqrt(n):
            raise PreconditionError(f"ell={ell} exceeds sqrt(n) for n={n}")
        tangled = sum(not sample_is_tangle_free(sample_symmetric(n, d, cfg.seed, trial=t + (n << 32)), ell)
                      for t in range(cfg.trials))
        p = tangled / cfg.trials
        per[n] = {"tangled_count": int(tangled), "freq": p, "freq_times_n": p * n, "fit": p * n / scale}
    fits = [v["fit"] for v in per.values()]
    ns = sorted(per)
    ratios = [per[b]["freq"] / per[a]["freq"] if per[a]["freq"] > 0 else None for a, b in zip(ns, ns[1:])]
    return {"d": d, "ell": ell, "trials": cfg.trials, "seed": cfg.seed, "per_n": per,
            "fitted_constant": max(fits), "fit_spread": max(fits) / min(fits) if min(fits) > 0 else float("inf"),
            "doubling_ratios": ratios}


# -- decomposition and norms -----------------------------------------------------------

def run_decomp_check(cfg: ExperimentConfig) -> list[dict]:
    """Conjugation residual for every sample; decomposition residual where tangle-free."""
    data = cfg.data()
    spec = BasisSpec(min(cfg.degree_cap, 16), 128)
    for n in cfg.n_values:
        nb._check_cap(n, data.d, cfg.ell, nb.PATH_CAP)
    rows = []
    for n in cfg.n_values:
        for t in range(cfg.trials):
            sample = sample_symmetric(n, data.d, cfg.seed, trial=t + (n << 32))
            row = {"n": n, "trial": t, "seed": cfg.seed, "ell": cfg.ell}
            row["conjugation_residual"] = nb.conjugation_check(data, sample, cfg.s, spec, ells=())["residual"]
            try:
                res = nb.decomposition_residual(data, sample, cfg.s, spec, cfg.ell)
                row.update({"tangle_free": True, "decomposition_residual": res.residual, "probe": res.probe})
            except nb.TangledSampleError:
                row.update({"tangle_free": False, "decomposition_residual": None})
            rows.append(row)
    return rows


def run_norm_trend(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    data = cfg.data()
    ell = cfg.ell
    rows = nb.norm_trend_experiment(data, cfg.n_values, lambda n: ell, cfg.s, cfg.spec(), cfg.trials, cfg.seed)
    med = {}
    for n in cfg.n_values:
        vals = [r["bl_k0_norm"] ** (1.0 / ell) for r in rows if r["n"] == n]
        if vals:
            med[n] = float(np.median(vals))
    return rows, {"median_root_norm": med}


# -- identity suite -------------------------------------------------------------------------

def _check(name, value, threshold, cmp="lt"):
    ok = bool(value < threshold) if cmp == "lt" else bool(value <= threshold)
    return {"check": name, "value": float(value), "threshold": threshold, "pass": ok}


def run_identity_suite(cfg: ExperimentConfig) -> list[dict]:
    """Fixed-seed identity checks; each entry has ``check, value, threshold, pass``."""
    data = cfg.data()
    ledger = []
    rep = validate_schottky(data, tol=1e-10)
    ledger.append({"check": "validate_schottky", "value": float(len(rep.violations)), "threshold": 1,
                   "pass": rep.ok, "violations": rep.violations})
    if not rep.ok:
        return ledger
    seed = cfg.seed
    spec = BasisSpec(min(cfg.degree_cap, 16), 128)
    small = BasisSpec(8, 64)

    # reproducing property on random polynomials
    rng = np.random.default_rng(seed)
    err = 0.0
    for D in data.discs:
        for _ in range(5):
            coef = rng.standard_normal(11) + 1j * rng.standard_normal(11)
            f = lambda z, c=coef, D=D: np.polyval(c, (z - D.center) / D.radius)
            z = D.center + 0.5 * D.radius * np.exp(2j * np.pi * rng.random(8)) * rng.random(8)
            err = max(err, np.max(np.abs(reproduce(D, f, z) - f(z))))
    ledger.append(_check("reproducing_property", err, 1e-8))

    # kernel-diagonal trace vs matrix trace
    disc = Discretization(data, spec)
    s = 0.6
    A = disc.A_all(s)
    iw, jw = (1, 0), (3, 0)
    mat = np.trace(disc.word_product(iw, s, A) @ disc.word_product(jw, s, A).conj().T)
    ker = trace_via_kernel(product_kernel_diagonal(data, iw, jw, s), data.discs)
    ledger.append(_check("kernel_trace", abs(ker - mat) / abs(mat), 1e-6))

    # adjoint kernel formula
    d12 = Discretization(data, BasisSpec(12, 64))
    adj = assemble_adjoint_quadrature(data, 0, 0.6, BasisSpec(12, 64))
    ledger.append(_check("adjoint_kernel", np.max(np.abs(adj - d12.A_matrix(0, 0.6).conj().T)), 1e-8))

    # determinant factorization over the permutation representation
    sample = sample_symmetric(4, data.d, seed, trial=1)
    pm = permutation_matrices(sample)
    s = 0.6 + 0.4j
    A = disc.A_all(s)
    full = np.linalg.det(np.eye(disc.dim * 4) - transfer_matrix(A, pm.rho_n))
    triv = np.linalg.det(np.eye(disc.dim) - A.sum(axis=0))
    new = np.linalg.det(np.eye(disc.dim * 3) - transfer_matrix(A, pm.rho_n0))
    ledger.append(_check("det_factorization", abs(full - triv * new) / abs(full), 1e-6))
    sparse = NewZeroDeterminant(disc, np.asarray(sample.sigma))(s)
    ledger.append(_check("sparse_new_det", abs(sparse - new) / abs(new), 1e-8))

    # conjugation and norm transfer
    for s in (0.7, 0.6 + 0.4j):
        res = nb.conjugation_check(data, sample_symmetric(4, data.d, seed, trial=7), s, spec)
        ledger.append(_check(f"conjugation s={s}", res["residual"], 1e-10))
        worst = max(v["rel_err"] for v in res["norm_transfer"].values())
        ledger.append(_check(f"norm_transfer s={s}", worst, 1e-8))

    # path expansion of B^l and aggregated vs per-path assembly
    sample3 = sample_symmetric(3, data.d, seed, trial=2)
    B = nb.assemble_B(data, sample3, 0.7, small).matrix
    ledger.append(_check("path_expansion_B2", np.max(np.abs(B @ B - nb.path_sum_power(data, sample3, 0.7, small, 2))), 1e-10))
    ops = nb.assemble_path_operators(data, sample3, 0.7, small, 2)
    Bb, R = nb.naive_path_operators(data, sample3, 0.7, small, 2)
    diff = max([np.max(np.abs(ops.Bbar - Bb))] + [np.max(np.abs(a - b)) for a, b in zip(ops.R, R)])
    ledger.append(_check("aggregated_vs_naive", diff, 1e-12))

    # decomposition on a tangle-free sample (first one found)
    for t in range(1000):
        smp = sample_symmetric(6, data.d, seed, trial=100 + t)
        if is_tangle_free(build_colored_graph(smp), 1):
            res = nb.decomposition_residual(data, smp, 0.7, spec, 1)
            ledger.append(_check("decomposition_l1", res.residual, 1e-12))
            break

    # high trace, m = 1
    for ell in (1, 2):
        ht = nb.high_trace_crosscheck(data, sample3, 0.7, spec, ell)
        ledger.append(_check(f"high_trace_l{ell}", ht.rel_err, 1e-8))
    return ledger
