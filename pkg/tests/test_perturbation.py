from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest

from ptwell.model import DomainError, WellConfig
from ptwell.perturbation import (PRINTED_CONVENTION, PRINTED_MATRIX_C, PRINTED_MATRIX_S,
                                 PRINTED_S_OVER_C, PRINTED_SQRT2_C, PRINTED_SQRT2_S, PRINTED_TAN,
                                 PRINTED_TAU_X, PRINTED_Z, BranchTag, approx_secular_sigma,
                                 compare_coefficients, cos_z_series, eval_tau, exact_secular_sigma,
                                 exact_z, first_omitted_term, lam_mu_ring, lambda_mu_matrix_elements,
                                 lambda_of, matrix_elements_numeric, printed_tau_y, root_from_series,
                                 sc_closed, sc_expansions, sigma_roots, tan_kappa_series, tau_of,
                                 tau_series, verify_z_series, z_series)
from ptwell.secular import eval_secular, find_spectrum

PI = math.pi


def exact_displacements(m, mu):
    tx, ty = BranchTag("x", m), BranchTag("y", m)
    levels = find_spectrum(WellConfig(0.5, 2 * mu), ty.level)
    return (levels[tx.level - 1].kappa.real - tx.base_kappa,
            ty.base_kappa - levels[ty.level - 1].kappa.real)


# --- branch tags

def test_lambda_values():
    assert lambda_of(BranchTag("x", 1)) == pytest.approx(-2 / PI)
    assert lambda_of(BranchTag("y", 1)) == pytest.approx(2 / (3 * PI))
    for b in ("x", "y"):
        mags = [abs(lambda_of(BranchTag(b, m))) for m in range(1, 6)]
        assert all(u > v for u, v in zip(mags, mags[1:]))


def test_bad_tags():
    with pytest.raises(DomainError):
        BranchTag("z", 1)
    with pytest.raises(DomainError):
        BranchTag("x", 0)


# --- z series

def test_z_leading_coefficients():
    z = z_series(11)
    assert z.coeff(lam=2, mu=2) == 1
    assert z.coeff(lam=6, mu=6) == F(7, 6)
    assert z.coeff(lam=9, mu=8) == F(40, 3)


def test_z_reproduces_every_printed_coefficient():
    rep = compare_coefficients(z_series(11), PRINTED_Z)
    assert rep.exact and rep.checked == 12
    assert z_series(11).coeff(lam=10, mu=10) == F(83, 40)


def test_z_next_order_terms():
    # The lambda^12 terms do not vanish, so the remainder is O(lam^12), not O(lam^13).
    z = z_series(12)
    assert z.coeff(lam=12, mu=10) == F(715, 6)
    assert z.coeff(lam=12, mu=12) == F(73, 24)


def test_z_residual_ratios():
    rep = verify_z_series(1.0, [0.05, 0.025, 0.0125])
    for r in rep.ratios:
        assert 2 ** 8 * 0.7 <= r <= 2 ** 9 * 1.5
    assert verify_z_series(0.7, [0.0]).residuals == (0.0,)


def test_z_series_against_bisection():
    lam = -2 / (5 * PI)
    tag = BranchTag("x", 2)
    series = z_series(11).evaluate(lam=lam, mu=1.0)
    assert abs(series - exact_z(lam, 1.0)) <= 3 * first_omitted_term(tag, 1.0)


# --- roots from the series

@pytest.mark.parametrize("b", ["x", "y"])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_zero_coupling_root(b, m):
    tag = BranchTag(b, m)
    assert root_from_series(tag, 0.0) == pytest.approx(tag.base_kappa, rel=1e-15)


def test_series_root_against_exact():
    tag = BranchTag("x", 2)
    exact = find_spectrum(WellConfig(0.5, 2.0), 5)[4].kappa.real
    assert abs(root_from_series(tag, 1.0) - exact) <= first_omitted_term(tag, 1.0)


def test_branch_inequality():
    x, y = tau_series(5)
    for m in range(1, 7):
        for mu in (0.25, 0.5, 1.0):
            ex, ey = exact_displacements(m, mu)
            assert ex > ey > 0
            if m > 1:
                assert eval_tau(x, tau_of(m), mu) > eval_tau(y, tau_of(m), mu)


def test_root_warns_outside_range():
    with pytest.warns(RuntimeWarning):
        root_from_series(BranchTag("x", 1), 2.0)


# --- tau series

def test_tau_leading_coefficient():
    for s in tau_series(5):
        assert s.coeff(tau=2, mu=2, inv_pi=2) == 1


def test_tau_matches_printed():
    x, y = tau_series(5)
    assert compare_coefficients(x, PRINTED_TAU_X).exact
    assert compare_coefficients(y, printed_tau_y()).exact
    assert x.coeff(tau=5, mu=4, inv_pi=5) == -2


def test_tau_odd_power_doubling():
    x, y = tau_series(5)
    d = x - y
    assert d.coeff(tau=3, mu=2, inv_pi=2) == 2
    assert all(e[0] % 2 == 1 for e, _ in d.terms())


def test_tau_error_is_order_mu_squared():
    x, _ = tau_series(5)
    t = tau_of(3)
    scaled = []
    for mu in (0.2, 0.1):
        ex, _ = exact_displacements(3, mu)
        scaled.append((eval_tau(x, t, mu) - ex) / mu ** 2)
    assert abs(scaled[0]) < 1e-5
    assert scaled[0] == pytest.approx(scaled[1], rel=0.05)


# --- rho expansions

def test_sc_coefficients():
    s, c, t = sc_expansions(10)
    assert s.coeff(rho=4) == F(3, 128)
    assert t.coeff(rho=8) == F(35, 2048)
    assert compare_coefficients(s, PRINTED_SQRT2_S).exact
    assert compare_coefficients(c, PRINTED_SQRT2_C).exact
    assert compare_coefficients(t.truncate(8), PRINTED_S_OVER_C).exact


def test_sc_unit_circle():
    s, c, t = sc_expansions(30)
    assert (s * s + c * c) == 2
    for rho in (0.1, 0.3, 0.5):
        S, C, T = sc_closed(rho)
        assert S * S + C * C == pytest.approx(2, abs=1e-14)
        assert s.evaluate(rho=rho) == pytest.approx(S, abs=1e-12)
        assert c.evaluate(rho=rho) == pytest.approx(C, abs=1e-12)
        assert t.evaluate(rho=rho) == pytest.approx(T, abs=1e-12)


def test_sc_y_branch_flips_c():
    _, cx, _ = sc_expansions(10, "x")
    _, cy, _ = sc_expansions(10, "y")
    assert cy == -cx


def test_sc_pole():
    with pytest.raises(DomainError):
        sc_closed(math.sqrt(2))


# --- (lambda, mu) matrix elements

def test_matrix_leading_coefficients():
    s, c = lambda_mu_matrix_elements(8)
    assert s.coeff(lam=2, mu=2) == F(1, 2)
    assert tan_kappa_series(8).coeff(lam=2, mu=2) == 1


def test_product_identity():
    # (sqrt2 S)(sqrt2 C) = 2 sin(k/2) cos(k/2) = sin k = cos z on the x branch.
    s, c = lambda_mu_matrix_elements(8)
    assert (s * c) == cos_z_series(8)


def test_quotient_consistency():
    s, c = lambda_mu_matrix_elements(8)
    assert (s / c) == tan_kappa_series(8)


def test_matrix_elements_against_exact_roots():
    s, c = lambda_mu_matrix_elements(8)
    lam = lambda_of(BranchTag("x", 1))
    errs = []
    for mu in (0.25, 0.125):
        k = find_spectrum(WellConfig(0.5, 2 * mu), 1)[0].kappa.real
        errs.append(abs(s.evaluate(lam=lam, mu=mu) - math.sqrt(2) * math.sin(k / 2)))
        assert c.evaluate(lam=lam, mu=mu) == pytest.approx(math.sqrt(2) * math.cos(k / 2), abs=1e-6)
    assert errs[0] / errs[1] > 2 ** 7


def test_odd_lambda_displays_differ_from_composition():
    s, c = lambda_mu_matrix_elements(8)
    rs, rc = compare_coefficients(s, PRINTED_MATRIX_S), compare_coefficients(c, PRINTED_MATRIX_C)
    rt = compare_coefficients(tan_kappa_series(8), PRINTED_TAN)
    keys = {(5, 4), (7, 6), (8, 6)}
    for rep in (rs, rc, rt):
        assert {e for e, _, _ in rep.mismatches} == keys
    assert s.coeff(lam=7, mu=6) == F(5, 2) and c.coeff(lam=7, mu=6) == F(-7, 2)


def test_sign_flipped_substitution_reproduces_displays():
    s, c = lambda_mu_matrix_elements(8, "x", PRINTED_CONVENTION)
    assert compare_coefficients(s, PRINTED_MATRIX_S).exact
    assert compare_coefficients(c, PRINTED_MATRIX_C).exact
    assert c.coeff(lam=7, mu=6) == F(7, 2)
    t = tan_kappa_series(8, "x", PRINTED_CONVENTION)
    assert compare_coefficients(t, PRINTED_TAN).exact and t.coeff(lam=7, mu=6) == -8
    assert (s * c) != cos_z_series(8)


def test_numeric_matrix_elements():
    tag = BranchTag("x", 1)
    S, C = matrix_elements_numeric(tag, 0.25)
    k = find_spectrum(WellConfig(0.5, 0.5), 1)[0].kappa.real
    assert S == pytest.approx(math.sqrt(2) * math.sin(k / 2), rel=1e-12)
    assert C == pytest.approx(math.sqrt(2) * math.cos(k / 2), rel=1e-12)


# --- sigma expansion

def test_sigma_zero_reduces_to_half_secular():
    for k in (0.7, 2.2, 4.0):
        assert approx_secular_sigma(k, 1.3, 0.0) == pytest.approx(-2 * eval_secular(WellConfig(0.5, 1.3), k), abs=1e-14)


def test_sigma_exact_form_matches_shifted_secular():
    k, xi, s = 2.7, 1.0, 0.05
    a = 0.5 + s / (2 * k)
    assert exact_secular_sigma(k, xi, s) == pytest.approx(-2 * eval_secular(WellConfig(a, xi), k), abs=1e-13)


def test_sigma_error_ratio():
    errs = [np.abs(np.array(sigma_roots(1.0, s, 6)) - np.array(sigma_roots(1.0, s, 6, exact=True)))
            for s in (0.05, 0.025)]
    assert np.all(np.abs(errs[0] / errs[1] - 8) < 8 * 0.3)


def test_sigma_unlocks_xi_independent_level():
    k_a = sigma_roots(0.5, 0.05, 2)[1]
    k_b = sigma_roots(1.0, 0.05, 2)[1]
    assert abs(k_a - k_b) > 1e-3
    assert sigma_roots(0.5, 0.0, 2)[1] == pytest.approx(PI, abs=1e-12)
