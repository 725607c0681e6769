import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schottky.bergman import (AliasingWarning, BasisSpec, Discretization, QuadratureWarning, assemble_A,
                              assemble_adjoint_quadrature, assemble_word, basis_eval, basis_project,
                              bergman_kernel_eval, boundary_points, fit_trace_constant, product_kernel_diagonal,
                              reproduce, trace_of, trace_product_samples, trace_via_kernel)
from schottky.geometry import Disc

UNIT = Disc(0.0, 1.0)


def test_basis_spec_validation():
    with pytest.raises(ValueError):
        BasisSpec(16, 64)
    assert BasisSpec(16, 128).size == 17


def test_kernel_at_origin():
    assert bergman_kernel_eval(UNIT, 0, 0) == pytest.approx(1 / np.pi)


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(max_magnitude=0.9), st.complex_numbers(max_magnitude=0.9))
def test_kernel_hermitian(z, w):
    D = Disc(2.0, 1.5)
    z, w = 2 + 1.5 * z / max(1.0, abs(z) / 0.9), 2 + 1.5 * w / max(1.0, abs(w) / 0.9)
    a, b = bergman_kernel_eval(D, z, w), np.conj(bergman_kernel_eval(D, w, z))
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_reproduce_z_squared():
    v = reproduce(UNIT, lambda w: w**2, 0.3, 30, 64)
    assert abs(v[0] - 0.09) < 1e-8


def test_reproducing_property_random_polys(data, rng):
    worst = 0.0
    for D in data.discs:
        for _ in range(20):
            c = rng.standard_normal(11) + 1j * rng.standard_normal(11)
            f = lambda z, c=c, D=D: np.polyval(c, (z - D.center) / D.radius)
            z = D.center + 0.5 * D.radius * rng.random(10) * np.exp(2j * np.pi * rng.random(10))
            worst = max(worst, np.max(np.abs(reproduce(D, f, z, 20, 64) - f(z))))
    assert worst < 1e-8


def test_basis_orthonormal_by_quadrature():
    from schottky.bergman import disc_quadrature
    D = Disc(-2.0, 0.7)
    z, w = disc_quadrature(D, 20, 64)
    P = basis_eval(D, z, 10)
    G = (P.conj() * w[:, None]).T @ P
    assert np.abs(G - np.eye(11)).max() < 1e-12


def test_project_basis_function_and_constant():
    D = Disc(3.0, 0.5)
    x = boundary_points(D, 64)
    for p in (0, 3, 7):
        a = basis_project(D, basis_eval(D, x, 15)[:, p], 15)
        e = np.zeros(16)
        e[p] = 1
        assert np.abs(a - e).max() < 1e-13
    a = basis_project(D, np.ones(64), 15)
    assert a[0] == pytest.approx(0.5 * np.sqrt(np.pi))
    assert np.abs(a[1:]).max() < 1e-15


def test_project_geometric_series():
    x = boundary_points(UNIT, 256)
    a = basis_project(UNIT, 1 / (2 - x), 30, warn=False)
    p = np.arange(31)
    assert np.abs(a - 2.0 ** -(p + 1) * np.sqrt(np.pi / (p + 1))).max() < 1e-10


def test_aliasing_warning():
    x = boundary_points(UNIT, 32)
    with pytest.warns(AliasingWarning):
        basis_project(UNIT, 1 / (1.05 - x), 7)


def test_A_structure(data, disc16):
    s = 0.6 + 0.2j
    for i in range(4):
        op = assemble_A(data, i, s)
        pat = op.disc_pattern()
        src = (i + 2) % 4
        assert not pat[i].any()
        assert np.array_equal(np.nonzero(pat.any(axis=0))[0], [src])
        v = np.zeros(op.shape[0], dtype=complex)
        other = (src + 1) % 4
        v[op.index(other)] = 1
        assert np.abs(op.matrix @ v).max() == 0


def test_A_at_zero_maps_constant(data, disc16):
    M1 = disc16.M1
    for i in range(4):
        A = disc16.A_matrix(i, 0.0)
        src = (i + 2) % 4
        v = np.zeros(disc16.dim)
        v[src * M1] = data.radii[src] * np.sqrt(np.pi)  # the constant function 1
        out = A @ v
        for j in range(4):
            blk = out[j * M1:(j + 1) * M1]
            if j == i:
                assert np.abs(blk).max() == 0
            else:
                assert blk[0] == pytest.approx(data.radii[j] * np.sqrt(np.pi))
                assert np.abs(blk[1:]).max() < 1e-12


def test_word_product_matches_direct(data, disc16):
    s = 0.7 - 0.3j
    for w in [(0, 1, 0), (1, 2, 3), (3, 3, 0)]:
        direct = assemble_word(data, w, s, disc16.spec).matrix
        assert np.abs(disc16.word_product(w, s) - direct).max() < 1e-10


def test_adjoint_kernel_formula(data):
    spec = BasisSpec(12, 64)
    d = Discretization(data, spec)
    for s in (0.6, 0.8 + 0.5j):
        for i in range(4):
            adj = assemble_adjoint_quadrature(data, i, s, spec)
            assert np.abs(adj - d.A_matrix(i, s).conj().T).max() < 1e-8


def test_not_self_adjoint(disc16):
    A = disc16.A_all(0.6)
    assert np.linalg.norm(A[0].conj().T - A[2], 2) > 0.01


def test_truncation_convergence(data):
    d16 = Discretization(data, BasisSpec(16, 128))
    d20 = Discretization(data, BasisSpec(20, 128))
    for s in (0.6, 0.6 + 0.4j):
        a = np.linalg.norm(d16.A_matrix(0, s), 2)
        b = np.linalg.norm(d20.A_matrix(0, s), 2)
        assert abs(a - b) < 1e-8


def test_trace_rank_one_kernel():
    D = Disc(1.0, 0.5)
    phi0 = lambda z: basis_eval(D, z, 0)[..., 0]
    t = trace_via_kernel(lambda z, w: phi0(z) * np.conj(phi0(w)), [D])
    assert t == pytest.approx(1.0, abs=1e-12)


def test_trace_kernel_vs_matrix(data, disc16):
    s = 0.6
    A = disc16.A_all(s)
    pairs = [((1, 0), (3, 0)), ((0, 1), (2, 1)), ((1, 1), (0, 1)), ((3, 2), (1, 2))]
    for iw, jw in pairs:
        mat = trace_of(disc16.word_product(iw, s, A) @ disc16.word_product(jw, s, A).conj().T)
        with warnings.catch_warnings():
            warnings.simplefilter("error", QuadratureWarning)
            ker = trace_via_kernel(product_kernel_diagonal(data, iw, jw, s), data.discs)
        assert abs(ker - mat) <= 1e-6 * abs(mat)


def test_trace_product_bound_heldout(data):
    for r in (0.55, 0.7):
        train = trace_product_samples(data, r, 30, (1, 2), seed=1, spec=BasisSpec(12, 64))
        test = trace_product_samples(data, r, 30, (2, 3), seed=2, spec=BasisSpec(12, 64))
        C = fit_trace_constant(train)
        assert all(row["ratio"] <= C for row in test)
