from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from ptwell.series import (Ring, SeriesPoly, arcsin_coefficients, binomial, cos_coefficients,
                           sin_coefficients)

R = Ring.total_degree(("x",), 12)
x = R.var("x")


def test_reciprocal_of_geometric():
    inv = (1 - x).reciprocal()
    assert all(inv.coeff(x=k) == 1 for k in range(13))
    assert (inv * (1 - x)) == 1


def test_truncation_drops_high_terms():
    p = x ** 7 * x ** 7
    assert len(p) == 0


def test_sin_squared_plus_cos_squared():
    s, c = x.apply(sin_coefficients), x.apply(cos_coefficients)
    assert s * s + c * c == 1


def test_arcsin_inverts_sin():
    assert x.apply(sin_coefficients).apply(arcsin_coefficients) == x


def test_rational_power_squares_back():
    u = 1 + x / 3
    assert u.power(F(1, 2)) ** 2 == u


def test_binomial_half():
    assert binomial(F(1, 2), 2) == F(-1, 8)


def test_floats_rejected_for_coefficients():
    with pytest.raises(TypeError):
        R.const(0.1)


def test_weighted_ring_keeps_unweighted_variable():
    W = Ring(("lam", "mu"), (1, 0), 3)
    lam, mu = W.var("lam"), W.var("mu")
    p = (lam * mu ** 5) ** 2
    assert p.coeff(lam=2, mu=10) == 1
    assert len(lam ** 4) == 0


def test_substitute_and_map_variable():
    T = Ring.total_degree(("t",), 6)
    t = T.var("t")
    y = (x + x ** 2).substitute(T, {"x": 2 * t})
    assert y.coeff(t=1) == 2 and y.coeff(t=2) == 4
    assert (x + x ** 2).map_variable("x", -1) == -x + x ** 2


def test_evaluate_matches_manual_sum():
    p = 1 + x / 2 + x ** 3 * F(2, 3)
    assert p.evaluate(x=0.3) == pytest.approx(1 + 0.15 + 2 / 3 * 0.027, rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=20), min_size=1, max_size=5))
def test_reciprocal_property(cs):
    p = R.const(1) + SeriesPoly.from_terms(R, {(k + 1,): c for k, c in enumerate(cs)})
    assert p * p.reciprocal() == 1
