import numpy as np
import pytest

from schottky.bergman import BasisSpec, Discretization
from schottky.covers import identity_cover, permutation_matrices, sample_symmetric
from schottky.thermo import pressure_increment
from schottky.transfer import (Representation, RepresentationError, TransferFamily, assemble_transfer,
                               fit_lipschitz_constant, fredholm_det, grid_winding, leading_eigenvalue,
                               operator_power_norm, resonance_scan, transfer_matrix, trivial_rep,
                               variation_ratios)

from conftest import DELTA_REF


def test_trivial_rep_is_sum_of_A(data, disc16):
    s = 0.5 + 0.1j
    op = assemble_transfer(data, s, trivial_rep(2), disc16.spec)
    assert np.abs(op.matrix - disc16.A_all(s).sum(axis=0)).max() < 1e-15


def test_twisted_dimension_and_blocks(data, disc8):
    pm = permutation_matrices(sample_symmetric(3, 2, 0))
    op = TransferFamily(data, pm.rho_n, disc8.spec).operator(0.6)
    assert op.shape[0] == 4 * 9 * 3
    pat = op.disc_pattern()
    # target j, source k nonzero only when k = conj(i) for some i != j, i.e. k != conj(j)
    for j in range(4):
        assert not pat[j, (j + 2) % 4]


def test_representation_checks():
    with pytest.raises(RepresentationError):
        Representation(np.ones((3, 2, 2)), 2)
    bad = Representation(np.stack([np.eye(2) * 2] * 4), 2)
    with pytest.raises(RepresentationError):
        bad.check()


def test_leading_eigenvalue_real_positive(data):
    for s in (0.3, 0.5):
        ev = leading_eigenvalue(data, s)
        assert ev.real > 0 and abs(ev.imag) < 1e-12


def test_pressure_link(data):
    # log of the leading eigenvalue vs the depth-increment pressure estimate
    for r in (0.3, 0.5, 0.8):
        lam = leading_eigenvalue(data, r).real
        assert abs(np.log(lam) - pressure_increment(data, r, 12)) < 0.02


def test_det_far_right_is_one(data):
    assert abs(fredholm_det(data, 30.0) - 1) < 1e-6


def test_det_vanishes_at_delta(data):
    assert abs(fredholm_det(data, DELTA_REF)) < 1e-3


def test_det_truncation(data):
    s = 0.6 + 0.4j
    a = fredholm_det(data, s, spec=BasisSpec(16, 128))
    b = fredholm_det(data, s, spec=BasisSpec(20, 128))
    assert abs(a - b) < 1e-8


def test_det_factorization(data, disc8):
    s = 0.55 - 0.3j
    A = disc8.A_all(s)
    pm = permutation_matrices(sample_symmetric(5, 2, 3))
    full = np.linalg.det(np.eye(disc8.dim * 5) - transfer_matrix(A, pm.rho_n))
    triv = np.linalg.det(np.eye(disc8.dim) - A.sum(0))
    new = np.linalg.det(np.eye(disc8.dim * 4) - transfer_matrix(A, pm.rho_n0))
    assert abs(full - triv * new) <= 1e-6 * abs(full)


def test_cauchy_riemann(data, disc8):
    fam = TransferFamily(data, trivial_rep(2), disc8.spec)
    h = 1e-4
    for s in (0.5 + 0.2j, 0.7 - 0.4j):
        fx = (fam.det(s + h) - fam.det(s - h)) / (2 * h)
        fy = (fam.det(s + 1j * h) - fam.det(s - 1j * h)) / (2 * h)
        assert abs(fy - 1j * fx) < 1e-4


def test_power_norm(data, disc8):
    rep = trivial_rep(2)
    n1 = operator_power_norm(data, 0.6, rep, disc8.spec, 1)
    assert n1 == pytest.approx(np.linalg.norm(disc8.A_all(0.6).sum(0), 2))
    n2 = operator_power_norm(data, 0.6, rep, disc8.spec, 2)
    n4 = operator_power_norm(data, 0.6, rep, disc8.spec, 4)
    assert n4 <= n2**2 + 1e-10
    with pytest.raises(ValueError):
        operator_power_norm(data, 0.6, rep, disc8.spec, 0)


def test_lipschitz_fit(data):
    pairs = [(0.27 + 0.1j + 1e-3, 0.27 + 0.1j), (0.265 - 0.3j + 1e-3j, 0.265 - 0.3j)]
    R = variation_ratios(data, pairs, None, BasisSpec(8, 64))
    fit = fit_lipschitz_constant(R)
    assert fit["spread"] <= 0.1
    assert np.all(R <= np.array(fit["C0"])[-1] ** np.array([1, 2, 3]) * (1 + 1e-12))


def test_winding_counts_simple_zero():
    f = lambda s: (s - 0.3) * (s + 2)
    re, im = np.linspace(0, 1, 9), np.linspace(-1, 1, 9)
    _, w = grid_winding(f, re, im)
    assert w.sum() == 1


def test_scan_near_delta(data):
    rep = resonance_scan(data, (DELTA_REF - 0.05, DELTA_REF + 0.05, -0.05, 0.05), (8, 8))
    assert len(rep.zeros) == 1
    z, mult = rep.zeros[0]
    assert mult == 1 and abs(z - DELTA_REF) < 1e-3
    assert rep.grid.shape == (8, 8)


def test_scan_right_of_delta_empty(data):
    rep = resonance_scan(data, (DELTA_REF + 0.1, 1.2, -1.0, 1.0), (12, 16), spec=BasisSpec(12, 64))
    assert rep.zeros == []


def test_scan_identity_cover_matches_trivial(data):
    pm = permutation_matrices(identity_cover(2, 2))
    rect = (DELTA_REF - 0.05, DELTA_REF + 0.05, -0.05, 0.05)
    a = resonance_scan(data, rect, (8, 8), rep=pm.rho_n0)
    b = resonance_scan(data, rect, (8, 8))
    assert [w for _, w in a.zeros] == [w for _, w in b.zeros]
    assert abs(a.zeros[0][0] - b.zeros[0][0]) < 1e-8


def test_report_serialization(data):
    rep = resonance_scan(data, (DELTA_REF - 0.05, DELTA_REF + 0.05, -0.05, 0.05), (8, 8))
    d = rep.to_dict()
    assert d["grid_shape"] == [8, 8] and len(d["zeros"]) == 1
    lines = rep.grid_csv().strip().splitlines()
    assert lines[0] == "re_s,im_s,re_det,im_det" and len(lines) == 65
