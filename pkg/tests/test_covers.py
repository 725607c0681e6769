import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schottky.covers import (CoverSample, ball, ball_cycle_ranks, build_colored_graph, canonical_edge, contrast_basis,
                             graph_from_edges, identity_cover, is_graph_tangle_free, is_tangle_free,
                             permutation_matrices, sample_is_tangle_free, sample_symmetric, symmetric_from)


def five_cycle():
    return symmetric_from([[1, 2, 3, 4, 0], [0, 1, 2, 3, 4]])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.integers(2, 3), st.integers(0, 2**64 - 1))
def test_sample_is_symmetric(n, d, seed):
    smp = sample_symmetric(n, d, seed)
    for i in range(d):
        assert np.array_equal(smp.sigma[i + d][smp.sigma[i]], np.arange(n))


def test_sample_uniform_on_s3():
    counts = Counter(tuple(sample_symmetric(3, 2, 99, trial=t).sigma[0]) for t in range(30000))
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / 30000 - 1 / 6) < 0.01


def test_sample_deterministic():
    a = sample_symmetric(10, 2, 5, trial=3)
    b = sample_symmetric(10, 2, 5, trial=3)
    assert np.array_equal(a.sigma, b.sigma)
    assert not np.array_equal(a.sigma, sample_symmetric(10, 2, 5, trial=4).sigma)


def test_cover_sample_validation():
    with pytest.raises(ValueError):
        CoverSample(3, 1, np.array([[0, 1, 2], [0, 2, 1]]))
    with pytest.raises(ValueError):
        CoverSample(3, 1, np.array([[0, 0, 2], [0, 1, 2]]))


def test_centered_transposition():
    pm = permutation_matrices(symmetric_from([[1, 0]]))
    assert np.allclose(pm.S_centered[0], [[-0.5, 0.5], [0.5, -0.5]])


def test_identity_rho0():
    pm = permutation_matrices(identity_cover(5, 2))
    for U in pm.rho_n0.images:
        assert np.allclose(U, np.eye(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10**6))
def test_matrix_properties(n, seed):
    pm = permutation_matrices(sample_symmetric(n, 2, seed))
    assert np.abs(pm.S_centered.sum(axis=1)).max() < 1e-15
    assert np.abs(pm.S_centered.sum(axis=2)).max() < 1e-15
    pm.rho_n0.check(1e-12)
    U = contrast_basis(n)
    assert np.allclose(U @ U.T, np.eye(n - 1)) and np.allclose(U.sum(axis=1), 0)


def test_eigenvalues_from_cycles():
    smp = sample_symmetric(8, 2, 17)
    S = permutation_matrices(smp).S[0]
    perm = smp.sigma[0]
    seen, roots = set(), []
    for a in range(8):
        if a in seen:
            continue
        L, b = 0, a
        while b not in seen:
            seen.add(b)
            b = perm[b]
            L += 1
        roots += list(np.exp(2j * np.pi * np.arange(L) / L))
    ev = np.linalg.eigvals(S)
    key = lambda z: (round(z.real, 8), round(z.imag, 8))
    assert sorted(map(key, ev)) == sorted(map(key, roots))


def test_graph_examples():
    g1 = build_colored_graph(identity_cover(1, 2))
    assert g1.n_edges == 2
    g = build_colored_graph(five_cycle())
    assert g.n_edges == 10
    assert is_tangle_free(g, 1).tangle_free
    res = is_tangle_free(g, 2)
    assert not res.tangle_free and res.witness_rank == 3
    assert not is_tangle_free(g1, 1)


def test_canonical_edge():
    assert canonical_edge(3, 2, 1, 2) == (0, 1, 3)
    assert canonical_edge(1, 0, 3, 2) == (0, 1, 3)
    g = graph_from_edges([(0, 0, 1), (1, 2, 0)], 2)
    assert g.n_edges == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 10**6))
def test_edge_count_bound(n, seed):
    assert build_colored_graph(sample_symmetric(n, 2, seed)).n_edges <= 2 * n


def test_vectorized_matches_bfs():
    for t in range(150):
        n = 3 + t % 20
        smp = sample_symmetric(n, 2, 4, trial=t)
        g = build_colored_graph(smp)
        for ell in (1, 2, 3):
            assert sample_is_tangle_free(smp, ell) == bool(is_tangle_free(g, ell))


def test_tangle_monotone_in_ell():
    for t in range(1000):
        smp = sample_symmetric(40, 2, 8, trial=t)
        r = [sample_is_tangle_free(smp, ell) for ell in (1, 2, 3)]
        assert r[2] <= r[1] <= r[0]


def test_ball_rule():
    g = build_colored_graph(five_cycle())
    b = ball(g, 0, 1)
    # neighbours 1 and 4, the cycle edges at 0 and the loop at 0
    assert b.vertices == frozenset({0, 1, 4}) and len(b.edges) == 3


def test_whole_graph_tangle():
    g = build_colored_graph(five_cycle())
    assert not is_graph_tangle_free(g)
    assert is_graph_tangle_free(graph_from_edges([(0, 0, 1), (1, 0, 2), (2, 0, 0)], 2))
