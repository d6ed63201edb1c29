from __future__ import annotations

import math

import numpy as np
import pytest

from ptwell.criticality import (WindowTooSmallWarning, critical_coupling, critical_curve,
                                crossing_strength, exceptional_point_check, merging_levels,
                                solve_exceptional_half, verify_crossing)
from ptwell.galerkin import oracle_spectrum
from ptwell.model import ConvergenceError, DomainError, WellConfig
from ptwell.secular import find_spectrum

# Boundary at a = 1/4 from the bisection, confirmed by the Galerkin oracle below.
XI_CRIT_QUARTER = 2.6846761886


def test_exceptional_point_values():
    ep = solve_exceptional_half()
    assert ep.nu0 == pytest.approx(3.874366817, abs=1e-8)
    assert ep.mu0 == pytest.approx(2.529882472, abs=1e-8)
    assert ep.xi_crit == pytest.approx(5.059764944, abs=1e-8)
    assert ep.level_pair == (2, 3)
    assert max(abs(r) for r in ep.residuals()) < 1e-12


def test_exceptional_point_is_a_double_root():
    d, dd = exceptional_point_check(solve_exceptional_half())
    assert d < 1e-12 and dd < 1e-10


def test_crossing_strengths():
    assert crossing_strength(1) == pytest.approx(4.442882938, abs=1e-9)
    assert crossing_strength(2) == pytest.approx(3 * math.sqrt(2) * math.pi, rel=1e-15)
    vals = [crossing_strength(m) for m in range(1, 8)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("m", [0, -1, 1.5, True])
def test_crossing_strength_rejects_bad_m(m):
    with pytest.raises(DomainError):
        crossing_strength(m)


def test_critical_coupling_half_matches_closed_form():
    xc = critical_coupling(0.5)
    assert xc == pytest.approx(5.059764944, abs=1e-6)
    assert xc == pytest.approx(solve_exceptional_half().xi_crit, abs=1e-8)
    find_spectrum(WellConfig(0.5, xc - 1e-6), 8)
    assert merging_levels(0.5, xc + 1e-6, 8) == (2, 3)


def test_critical_coupling_quarter_against_oracle():
    xc = critical_coupling(0.25)
    assert xc == pytest.approx(XI_CRIT_QUARTER, abs=1e-8)
    assert merging_levels(0.25, xc + 1e-6, 8) == (1, 2)
    below = oracle_spectrum(WellConfig(0.25, xc - 1e-3), 1024)
    above = oracle_spectrum(WellConfig(0.25, xc + 1e-3), 1024)
    assert not below.complex_pairs(8)
    assert len(above.complex_pairs(8)) == 1


def test_small_window_warns():
    with pytest.warns(WindowTooSmallWarning):
        critical_coupling(0.5, level_window=2, tol=1e-6)


def test_no_merger_raises():
    with pytest.raises(ConvergenceError):
        critical_coupling(0.9, xi_max=3.0)


def test_domain_checks():
    with pytest.raises(DomainError):
        critical_coupling(1.0)
    with pytest.raises(DomainError):
        critical_coupling(0.5, level_window=1)


def test_critical_curve_parallel():
    curve = critical_curve([0.25, 0.5], workers=2)
    assert curve.xi_crit[0] == pytest.approx(XI_CRIT_QUARTER, abs=1e-8)
    assert curve.xi_crit[1] == pytest.approx(5.059764944, abs=1e-6)
    assert curve.jumps == (0,)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_unavoided_crossings(m):
    rep = verify_crossing(m)
    k = (2 * m - 1) * math.pi
    assert rep.ok
    assert abs(rep.sin_factor) < 1e-12 and abs(rep.coupling_factor) < 1e-12
    assert rep.below[0] < k < rep.below[1]
    assert rep.above[1] - rep.above[0] > 1e-6


def test_first_crossing_lies_in_unbroken_phase():
    assert 0 < crossing_strength(1) < solve_exceptional_half().xi_crit
