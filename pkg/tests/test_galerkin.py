from __future__ import annotations

import math

import numpy as np
import pytest

from ptwell.galerkin import (MatchCollisionError, basis_values, build_hamiltonian_matrix,
                             convergence_orders, extrapolated_levels, match_levels, oracle_sweep,
                             oracle_spectrum, richardson)
from ptwell.model import DomainError, WellConfig
from ptwell.secular import find_spectrum


def test_zero_coupling_is_diagonal():
    h = build_hamiltonian_matrix(WellConfig(0.5, 0.0), 16)
    assert np.array_equal(h, np.diag((np.arange(1, 17) * math.pi / 2) ** 2).astype(complex))


def test_non_hermitian_part_has_rank_two():
    h = build_hamiltonian_matrix(WellConfig(0.3, 2.0), 40)
    assert np.linalg.matrix_rank(h - h.conj().T, tol=1e-10) == 2
    assert np.allclose(h, h.T)


def test_decoupled_basis_functions_at_half():
    u, v = basis_values(16, 0.5), basis_values(16, -0.5)
    for n in (4, 8, 12, 16):
        assert abs(u[n - 1]) < 1e-14 and abs(v[n - 1]) < 1e-14
    h = build_hamiltonian_matrix(WellConfig(0.5, 3.0), 16)
    row = h[3].copy()
    row[3] = 0
    assert np.max(np.abs(row)) < 1e-13


def test_bad_size():
    with pytest.raises(DomainError):
        build_hamiltonian_matrix(WellConfig(0.5, 1.0), 0)


def test_square_well_spectrum():
    ev = oracle_spectrum(WellConfig(0.5, 0.0), 64).lowest(6)
    assert np.max(np.abs(ev - (np.arange(1, 7) * math.pi / 2) ** 2)) < 1e-12


def test_first_order_convergence():
    cfg = WellConfig(0.5, 3.0)
    ref = np.array([r.energy.real for r in find_spectrum(cfg, 6)])
    errs = np.array([oracle_spectrum(cfg, M).lowest(6).real - ref for M in (256, 512, 1024, 2048)])
    for n in range(6):
        if abs(errs[0, n]) < 1e-8:
            continue  # xi-independent level, exact in the basis
        assert np.all(np.diff(np.abs(errs[:, n])) < 0)
        assert np.all(np.sign(errs[:, n]) == np.sign(errs[0, n]))
        assert np.all(convergence_orders(errs[:, n]) >= 0.95)


def test_broken_phase_has_conjugate_pair():
    orc = oracle_spectrum(WellConfig(0.5, 5.5), 1024)
    pairs = orc.complex_pairs(6)
    assert len(pairs) == 1
    assert orc.conjugate_asymmetry() < 1e-8 * orc.scale
    low = orc.lowest(4)
    assert low[1] == pytest.approx(low[2].conjugate(), abs=1e-8)


def test_richardson_and_matching():
    assert np.allclose(richardson([1.0, 2.0], [1.5, 2.5]), [2.0, 3.0])
    orc = np.array([1.0, 5 - 1j, 5 + 1j, 9.0])
    assert list(match_levels(np.array([5 + 0.9j, 1.1, 5 - 1.2j]), orc)) == [2, 0, 1]
    with pytest.raises(MatchCollisionError):
        match_levels(np.array([1.0, 1.1]), orc)


def test_extrapolation_beats_raw():
    cfg = WellConfig(0.25, 2.0)
    ref = np.array([r.energy.real for r in find_spectrum(cfg, 4)])
    ex = extrapolated_levels(cfg, 256, 4)
    raw_err = np.max(np.abs(ex.raw_fine.real / ref - 1))
    ext_err = np.max(np.abs(ex.extrapolated.real / ref - 1))
    assert ext_err < 1e-4 and ext_err < raw_err / 10


def test_sweep_parallel_matches_serial():
    cfgs = [WellConfig(0.5, x) for x in (1.0, 2.0, 3.0)]
    serial = oracle_sweep(cfgs, 64, 4)
    parallel = oracle_sweep(cfgs, 64, 4, workers=2)
    for s, p in zip(serial, parallel):
        assert np.allclose(s, p, rtol=1e-13)
