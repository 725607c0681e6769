"""Schottky disc systems, words and the basic Mobius bookkeeping.

Letters are 0-based: for ``d`` generators the alphabet is ``0 .. 2d-1`` and the
partner of letter ``i`` is ``(i + d) % 2d``. A word is a plain tuple of letters.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DISJOINT_TOL = 1e-9
DOMAIN_TOL = 1e-12


class SchottkyError(ValueError):
    """Invalid disc configuration or generator data."""


class WordError(ValueError):
    """Inadmissible or otherwise unusable word."""


class DomainError(ValueError):
    """A point left the region where the derivative cocycle is continued."""


@dataclass(frozen=True)
class Disc:
    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise SchottkyError(f"disc radius must be positive, got {self.radius}")

    @property
    def interval(self) -> tuple[float, float]:
        return (self.center - self.radius, self.center + self.radius)


@dataclass(frozen=True)
class SchottkyData:
    """Disc configuration together with its ``2d`` pairing generators.

    ``generators`` has shape ``(2d, 2, 2)``; ``generators[i]`` maps the exterior
    of disc ``conj(i)`` onto the closure of disc ``i``.
    """

    d: int
    discs: tuple[Disc, ...]
    generators: np.ndarray = field(repr=False)

    def __post_init__(self):
        gens = np.asarray(self.generators, dtype=float).reshape(-1, 2, 2)
        gens.setflags(write=False)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "discs", tuple(self.discs))
        if self.d < 2:
            raise SchottkyError("need d >= 2")
        if len(self.discs) != 2 * self.d or gens.shape[0] != 2 * self.d:
            raise SchottkyError("expected 2d discs and 2d generators")

    @property
    def n_letters(self) -> int:
        return 2 * self.d

    @property
    def centers(self) -> np.ndarray:
        return np.array([D.center for D in self.discs])

    @property
    def radii(self) -> np.ndarray:
        return np.array([D.radius for D in self.discs])

    def conj(self, i: int) -> int:
        return (i + self.d) % (2 * self.d)


def conj(i: int, d: int) -> int:
    return (i + d) % (2 * d)


# -- words ---------------------------------------------------------------

def is_admissible(w, d: int) -> bool:
    return all(a != conj(b, d) for a, b in zip(w, w[1:]))


def check_word(w, d: int) -> tuple[int, ...]:
    w = tuple(int(a) for a in w)
    if any(a < 0 or a >= 2 * d for a in w):
        raise WordError(f"letter out of range in {w}")
    if not is_admissible(w, d):
        raise WordError(f"word {w} is not reduced")
    return w


def mirror(w, d: int) -> tuple[int, ...]:
    """Mirror word: reversed and conjugated, so that its matrix is the inverse."""
    return tuple(conj(a, d) for a in reversed(w))


def can_follow(u, v, d: int) -> bool:
    """True if ``u`` followed by ``v`` is still a reduced word."""
    return not u or not v or u[-1] != conj(v[0], d)


def enumerate_words(d: int, N: int) -> list[tuple[int, ...]]:
    """All reduced words of length ``N`` in lexicographic order."""
    if N < 0:
        raise ValueError("N must be >= 0")
    words = [()]
    for _ in range(N):
        words = [w + (a,) for w in words for a in range(2 * d)
                 if not w or w[-1] != conj(a, d)]
    return words


def words_up_to(d: int, N: int) -> list[tuple[int, ...]]:
    return list(itertools.chain.from_iterable(enumerate_words(d, k) for k in range(1, N + 1)))


# -- Mobius helpers --------------------------------------------------------

def mobius(M, z):
    return (M[0, 0] * z + M[0, 1]) / (M[1, 0] * z + M[1, 1])


def mobius_derivative(M, z):
    # unit determinant
    return 1.0 / (M[1, 0] * z + M[1, 1]) ** 2


def log_derivative(M, z):
    """Principal-branch ``log`` of the derivative of a real Mobius map.

    Valid wherever ``cz + d`` stays in an open half plane ``Re > 0`` or
    ``Re < 0``, which holds on any disc centered on the real axis that avoids
    the pole.
    """
    q = M[1, 0] * np.asarray(z) + M[1, 1]
    q = np.where(np.real(q) < 0, -q, q)
    return -2.0 * np.log(q.astype(complex))


def normalize_sign(M):
    M = np.array(M, dtype=float)
    if M[1, 0] > 0 or (M[1, 0] == 0 and M[1, 1] < 0):
        M = -M
    return M


# -- construction and validation -----------------------------------------

def _check_disjoint(centers, radii, tol=DISJOINT_TOL):
    bad = []
    for a, b in itertools.combinations(range(len(centers)), 2):
        gap = abs(centers[a] - centers[b]) - radii[a] - radii[b]
        if gap <= tol:
            bad.append((a, b, gap))
    return bad


def build_symmetric_schottky(centers, radii) -> SchottkyData:
    """Build the generators pairing real-centered discs.

    ``generators[i] = [[-c_i, c_i c_j + r_i r_j], [-1, c_j]] / sqrt(r_i r_j)``
    with ``j = conj(i)``: it sends ``infinity`` to ``c_i`` and maps the circle
    of ``D_j`` onto the circle of ``D_i``.
    """
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if centers.shape != radii.shape or centers.ndim != 1 or len(centers) % 2:
        raise SchottkyError("centers and radii must be equal-length lists of even length")
    if np.any(radii <= 0):
        raise SchottkyError("radii must be positive")
    bad = _check_disjoint(centers, radii)
    if bad:
        a, b, gap = bad[0]
        raise SchottkyError(f"discs {a} and {b} overlap or touch (gap {gap:.3g})")
    d = len(centers) // 2
    gens = []
    for i in range(2 * d):
        j = conj(i, d)
        M = np.array([[-centers[i], centers[i] * centers[j] + radii[i] * radii[j]],
                      [-1.0, centers[j]]])
        gens.append(normalize_sign(M / np.sqrt(radii[i] * radii[j])))
    discs = [Disc(float(c), float(r)) for c, r in zip(centers, radii)]
    return SchottkyData(d, tuple(discs), np.array(gens))


@dataclass
class ValidationReport:
    violations: list[str]
    max_boundary_error: float
    max_det_error: float
    max_inverse_error: float

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_schottky(data: SchottkyData, tol: float = 1e-10, n_samples: int = 64) -> ValidationReport:
    """Check disjointness, unit determinants, inverse pairing and the mapping property."""
    violations = []
    c, r = data.centers, data.radii
    for a, b, gap in _check_disjoint(c, r):
        violations.append(f"discs {a},{b} not disjoint (gap {gap:.3g})")
    G = data.generators
    det_err = float(np.max(np.abs(np.linalg.det(G) - 1.0)))
    if det_err > tol:
        violations.append(f"determinant error {det_err:.3g}")
    inv_err = 0.0
    I = np.eye(2)
    for i in range(data.n_letters):
        P = G[data.conj(i)] @ G[i]
        inv_err = max(inv_err, min(np.max(np.abs(P - I)), np.max(np.abs(P + I))))
    if inv_err > tol:
        violations.append(f"inverse pairing error {inv_err:.3g}")

    theta = 2 * np.pi * np.arange(n_samples) / n_samples
    bnd_err = 0.0
    inside_fail = []
    for i in range(data.n_letters):
        j = data.conj(i)
        M = G[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            img = mobius(M, c[j] + r[j] * np.exp(1j * theta))
            e = np.abs(np.abs(img - c[i]) - r[i])
        bnd_err = max(bnd_err, float(np.max(np.where(np.isfinite(e), e, np.inf))))
        # exterior points, including infinity, land inside D_i
        ext = c[j] + r[j] * np.array([1.5, 3.0, 10.0]) [:, None] * np.exp(1j * theta[::8])
        with np.errstate(divide="ignore", invalid="ignore"):
            img = mobius(M, ext.ravel())
        inf_img = M[0, 0] / M[1, 0] if M[1, 0] != 0 else np.inf
        pts = np.append(img, inf_img)
        if not np.all(np.abs(pts - c[i]) < r[i] * (1 + tol)):
            inside_fail.append(i)
    if bnd_err > tol:
        violations.append(f"boundary mapping error {bnd_err:.3g}")
    if inside_fail:
        violations.append(f"exterior not mapped into partner disc for letters {inside_fail}")
    return ValidationReport(violations, bnd_err, det_err, inv_err)


# -- word quantities ---------------------------------------------------------

def word_matrix(data: SchottkyData, w) -> np.ndarray:
    w = check_word(w, data.d)
    M = np.eye(2)
    for a in w:
        M = M @ data.generators[a]
    return M


def interval_length(data: SchottkyData, w) -> float:
    """Length of the interval ``I_w``: the image of the last letter's interval
    under the matrix of ``w`` with its last letter dropped."""
    w = check_word(w, data.d)
    if not w:
        raise WordError("interval length undefined for the empty word")
    M = word_matrix(data, w[:-1])
    D = data.discs[w[-1]]
    lo, hi = D.interval
    return float(abs(mobius(M, hi) - mobius(M, lo)))


def tau_word(data: SchottkyData, w, z, check: bool = True) -> complex:
    """Birkhoff sum of the log-derivative cocycle along ``w`` at ``z``.

    Equals ``-sum_t log g'_{w_t}(z_{t+1})`` where ``z_{l+1} = z`` and
    ``z_t = g_{w_t}(z_{t+1})``; each log is taken on the principal branch.
    ``z`` must lie outside the open disc where the last generator has its pole.
    """
    w = check_word(w, data.d)
    c, r = data.centers, data.radii
    z = complex(z)
    if check and w:
        k = data.conj(w[-1])
        if abs(z - c[k]) < r[k] * (1 - DOMAIN_TOL):
            raise DomainError(f"{z} lies inside disc {k}, where letter {w[-1]} has its pole")
    total = 0j
    for a in reversed(w):
        M = data.generators[a]
        total -= complex(log_derivative(M, z))
        z = complex(mobius(M, z))
        if check and abs(z - c[a]) > r[a] * (1 + DOMAIN_TOL):
            raise DomainError(f"image {z} left disc {a}")
    return total


# -- serialization -------------------------------------------------------------

def schottky_to_dict(data: SchottkyData) -> dict:
    return {
        "d": data.d,
        "discs": [{"center": D.center, "radius": D.radius} for D in data.discs],
        "generators": [list(map(float, M.ravel())) for M in data.generators],
    }


def schottky_from_dict(obj: dict) -> SchottkyData:
    try:
        discs = obj["discs"]
        centers = [float(D["center"]) for D in discs]
        radii = [float(D["radius"]) for D in discs]
        d = int(obj["d"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchottkyError(f"malformed Schottky description: {exc!r}") from exc
    if len(discs) != 2 * d:
        raise SchottkyError("number of discs must be 2d")
    if obj.get("generators") is None:
        return build_symmetric_schottky(centers, radii)
    gens = np.array(obj["generators"], dtype=float).reshape(-1, 2, 2)
    return SchottkyData(int(obj["d"]), tuple(Disc(c, r) for c, r in zip(centers, radii)), gens)


def load_schottky(path) -> SchottkyData:
    return schottky_from_dict(json.loads(Path(path).read_text()))


def reference_config() -> SchottkyData:
    """Four unit discs centred at -6, -2, 6, 2 (pairing 0<->2, 1<->3)."""
    return build_symmetric_schottky([-6.0, -2.0, 6.0, 2.0], [1.0, 1.0, 1.0, 1.0])
