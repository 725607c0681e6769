"""Pressure of the interval-length potential and Bowen's dimension.

The pressure at exponent ``r`` is estimated from word sums
``Z_N(r) = sum_{|w|=N} |I_w|^r``. Two estimators are exposed:

* :func:`pressure_estimate`, the plain ``log(Z_N)/N``; it carries an
  ``O(1/N)`` bias from the multiplicative constant in front of ``exp(N P)``;
* :func:`pressure_increment`, ``log Z_N - log Z_{N-1}``, in which that constant
  cancels, so it converges geometrically in ``N``.

:func:`hausdorff_dimension` bisects the increment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .geometry import SchottkyData

WORD_CAP = 10**7


class DepthError(ValueError):
    """Requested depth exceeds the word cap."""


class NoSignChangeError(ValueError):
    """The pressure does not change sign on [0, 1]."""


@dataclass(frozen=True)
class PressureEstimate:
    r: float
    depth: int
    value: float
    raw_sum: float
    log_sum: float


@dataclass(frozen=True)
class DimensionResult:
    delta: float
    depth: int
    bracket: tuple[float, float]
    residual: float

    def to_dict(self) -> dict:
        return {"delta": self.delta, "depth": self.depth,
                "bracket": list(self.bracket), "residual": self.residual}


def word_count(d: int, N: int) -> int:
    return 1 if N == 0 else 2 * d * (2 * d - 1) ** (N - 1)


def prefix_table(data: SchottkyData, L: int):
    """Matrices and last letters of all reduced words of length ``L``, in
    lexicographic order. The empty word has last letter ``-1``."""
    d, m = data.d, data.n_letters
    G = data.generators
    mats = np.eye(2)[None]
    last = np.array([-1])
    letters = np.empty((1, 0), dtype=np.int8)
    for _ in range(L):
        cand = np.broadcast_to(np.arange(m), (len(last), m))
        keep = cand != ((last + d) % m)[:, None]
        keep[last < 0] = True
        parent = np.nonzero(keep)[0]
        child = cand[keep]
        mats = np.einsum("kab,kbc->kac", mats[parent], G[child])
        letters = np.concatenate([letters[parent], child[:, None].astype(np.int8)], axis=1)
        last = child
    return mats, last, letters


def log_interval_lengths(data: SchottkyData, N: int, with_words: bool = False):
    """``log |I_w|`` for every reduced word of length ``N >= 1`` (lexicographic)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if word_count(data.d, N) > WORD_CAP:
        raise DepthError(f"{word_count(data.d, N)} words at depth {N} exceeds cap {WORD_CAP}")
    d, m = data.d, data.n_letters
    c, r = data.centers, data.radii
    mats, last, letters = prefix_table(data, N - 1)
    cand = np.broadcast_to(np.arange(m), (len(last), m))
    keep = cand != ((last + d) % m)[:, None]
    keep[last < 0] = True
    parent, k = np.nonzero(keep)[0], cand[keep]
    lo, hi = c[k] - r[k], c[k] + r[k]
    cc, dd = mats[parent, 1, 0], mats[parent, 1, 1]
    out = np.log(2 * r[k]) - np.log(np.abs((cc * hi + dd) * (cc * lo + dd)))
    if with_words:
        words = np.concatenate([letters[parent], k[:, None].astype(np.int8)], axis=1)
        return out, words
    return out


def pressure_estimate(data: SchottkyData, r: float, N: int, _logs=None) -> PressureEstimate:
    """``(1/N) log sum_{|w|=N} |I_w|^r``, accumulated in log space."""
    if N < 1 or r < 0:
        raise ValueError("need N >= 1 and r >= 0")
    logs = log_interval_lengths(data, N) if _logs is None else _logs
    ls = float(logsumexp(r * logs))
    return PressureEstimate(float(r), N, ls / N, float(np.exp(ls)), ls)


def pressure_increment(data: SchottkyData, r: float, N: int) -> float:
    """``log Z_N(r) - log Z_{N-1}(r)`` for ``N >= 2``."""
    if N < 2:
        raise ValueError("increment needs N >= 2")
    a = logsumexp(r * log_interval_lengths(data, N))
    b = logsumexp(r * log_interval_lengths(data, N - 1))
    return float(a - b)


def hausdorff_dimension(data: SchottkyData, N: int = 12, tol: float = 1e-10) -> DimensionResult:
    """Zero of the pressure, found by bisection of the depth-``N`` increment."""
    logs_hi = log_interval_lengths(data, N)
    logs_lo = log_interval_lengths(data, N - 1)

    def f(s):
        return float(logsumexp(s * logs_hi) - logsumexp(s * logs_lo))

    lo, hi = 0.0, 1.0
    flo, fhi = f(lo), f(hi)
    if not (flo > 0 > fhi):
        raise NoSignChangeError(f"pressure increment does not change sign on [0,1]: {flo:.3g}, {fhi:.3g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    delta = 0.5 * (lo + hi)
    return DimensionResult(delta, N, (lo, hi), abs(f(delta)))
