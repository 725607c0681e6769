"""Empirical distortion constants for interval lengths.

Each function returns the smallest ``K >= 1`` for which the corresponding
two-sided bound holds over every word up to a length cap.
"""
from __future__ import annotations

import numpy as np

from .geometry import SchottkyData
from .thermo import log_interval_lengths, prefix_table


class _LengthTable:
    """log-lengths of all words of length 1..cap, addressable by word."""

    def __init__(self, data: SchottkyData, cap: int):
        self.m = data.n_letters
        self.logs, self.words, self.codes = {}, {}, {}
        for L in range(1, cap + 1):
            logs, words = log_interval_lengths(data, L, with_words=True)
            self.logs[L], self.words[L] = logs, words.astype(np.int64)
            self.codes[L] = self.encode(self.words[L])

    def encode(self, words):
        code = np.zeros(len(words), dtype=np.int64)
        for t in range(words.shape[1]):
            code = code * self.m + words[:, t]
        return code

    def lookup(self, words):
        L = words.shape[1]
        idx = np.searchsorted(self.codes[L], self.encode(words))
        return self.logs[L][idx]


def _two_sided(log_ratio) -> float:
    return float(np.exp(max(np.max(log_ratio), -np.min(log_ratio))))


def multiplicativity_constant(data: SchottkyData, cap: int) -> float:
    """``K`` with ``K^-1 |I_u||I_v| <= |I_uv| <= K |I_u||I_v|`` for ``|uv| <= cap``."""
    tab = _LengthTable(data, cap)
    ratios = []
    for L in range(2, cap + 1):
        W = tab.words[L]
        for a in range(1, L):
            ratios.append(tab.logs[L] - tab.lookup(W[:, :a]) - tab.lookup(W[:, a:]))
    return _two_sided(np.concatenate(ratios))


def mirror_constant(data: SchottkyData, cap: int) -> float:
    """``K`` with ``K^-1 <= |I_w| / |I_mirror(w)| <= K`` for ``|w| <= cap``."""
    tab = _LengthTable(data, cap)
    d = data.d
    ratios = []
    for L in range(1, cap + 1):
        W = tab.words[L]
        mir = (W[:, ::-1] + d) % (2 * d)
        ratios.append(tab.logs[L] - tab.lookup(mir))
    return _two_sided(np.concatenate(ratios))


def derivative_constant(data: SchottkyData, cap: int, n_points: int = 11) -> float:
    """``K`` with ``K^-1 |I_w| <= |g'_{w'}(x)| <= K |I_w|`` for real ``x`` in the
    last letter's interval (sampled on a uniform grid including endpoints)."""
    c, r = data.centers, data.radii
    t = np.linspace(-1.0, 1.0, n_points)
    ratios = []
    for L in range(1, cap + 1):
        logs, words = log_interval_lengths(data, L, with_words=True)
        mats, _, _ = prefix_table(data, L - 1)
        # lexicographic order: each prefix owns a contiguous run of children
        per = len(words) // len(mats)
        lex_prefix = np.repeat(np.arange(len(mats)), per)
        k = words[:, -1].astype(int)
        x = c[k][:, None] + r[k][:, None] * t[None, :]
        M = mats[lex_prefix]
        logder = -2 * np.log(np.abs(M[:, 1, 0, None] * x + M[:, 1, 1, None]))
        ratios.append((logder - logs[:, None]).ravel())
    return _two_sided(np.concatenate(ratios))


def exponential_rates(data: SchottkyData, Ns) -> dict[int, float]:
    """``max_{|w|=N} |I_w|^(1/N)`` for each ``N``."""
    return {int(N): float(np.exp(np.max(log_interval_lengths(data, N)) / N)) for N in Ns}


def distortion_constants(data: SchottkyData, cap: int) -> dict[str, float]:
    return {
        "multiplicativity": multiplicativity_constant(data, cap),
        "mirror": mirror_constant(data, cap),
        "derivative": derivative_constant(data, cap),
    }
