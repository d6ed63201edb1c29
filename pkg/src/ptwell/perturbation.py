"""Weak-coupling and large-excitation expansions at a = 1/2, plus the
small-sigma approximant of the secular equation near a = 1/2.

The odd levels are written as

    kappa_{4m-3} = (4m-3) pi/2 + x_m,     kappa_{4m-1} = (4m-1) pi/2 - y_m,

and both displacements solve ``sin z = l^2 m^2 / ((1 - l z)^2 - l^2 m^2)``
with ``l = -2/((4m-3) pi)`` (x) or ``l = +2/((4m-1) pi)`` (y), so that
``kappa = (1 - l z)/|l|`` on either branch.  All series below live in
:mod:`ptwell.series` rings where ``mu`` has weight 0, i.e. truncation is in
powers of ``lam`` (or ``tau``, ``rho``) only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from scipy.optimize import brentq

from .model import DomainError
from .secular import secular_value
from .series import Ring, SeriesPoly, sin_coefficients, cos_coefficients

F = Fraction

BRANCHES = ("x", "y")
BRANCH_CONVENTION = "branch"    # rho = 2|l| mu / (1 - l z), i.e. rho = xi/kappa exactly
PRINTED_CONVENTION = "printed"  # rho = 2|l| mu / (1 + l z), reproduces the displayed tables


@dataclass(frozen=True)
class BranchTag:
    branch: str
    m: int

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise DomainError(f"branch must be 'x' or 'y', got {self.branch!r}")
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise DomainError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def level(self) -> int:
        return 4 * self.m - 3 if self.branch == "x" else 4 * self.m - 1

    @property
    def base_kappa(self) -> float:
        return self.level * math.pi / 2


def lambda_of(tag: BranchTag) -> float:
    if tag.branch == "x":
        return -2.0 / ((4 * tag.m - 3) * math.pi)
    return 2.0 / ((4 * tag.m - 1) * math.pi)


def lam_mu_ring(order: int) -> Ring:
    return Ring(("lam", "mu"), (1, 0), order)


# Coefficients as displayed in the literature, keyed by exponent tuples.
PRINTED_Z = {
    (2, 2): F(1), (4, 4): F(1), (5, 4): F(2), (6, 6): F(7, 6), (7, 6): F(6),
    (8, 6): F(7), (8, 8): F(3, 2), (9, 8): F(40, 3), (10, 8): F(36), (10, 10): F(83, 40),
    (11, 8): F(30), (11, 10): F(80, 3),
}
# (tau, mu, inv_pi) for the x branch; the y branch flips odd tau powers.
PRINTED_TAU_X = {
    (2, 2, 2): F(1), (3, 2, 2): F(1), (4, 2, 2): F(3, 4), (4, 4, 4): F(1),
    (5, 2, 2): F(1, 2), (5, 4, 5): F(-2), (5, 4, 4): F(2),
}
PRINTED_SQRT2_S = {(0,): F(1), (2,): F(1, 8), (4,): F(3, 128), (6,): F(5, 1024),
                   (8,): F(35, 32768), (10,): F(63, 262144)}
PRINTED_SQRT2_C = {(0,): F(1), (2,): F(-1, 8), (4,): F(-5, 128), (6,): F(-13, 1024),
                   (8,): F(-141, 32768), (10,): F(-399, 262144)}
PRINTED_S_OVER_C = {(0,): F(1), (2,): F(1, 4), (4,): F(3, 32), (6,): F(5, 128),
                    (8,): F(35, 2048)}
PRINTED_MATRIX_S = {(0, 0): F(1), (2, 2): F(1, 2), (4, 4): F(3, 8), (5, 4): F(-1),
                    (6, 6): F(5, 16), (7, 6): F(-5, 2), (8, 8): F(35, 128), (8, 6): F(-1, 2)}
PRINTED_MATRIX_C = {(0, 0): F(1), (2, 2): F(-1, 2), (4, 4): F(-5, 8), (5, 4): F(1),
                    (6, 6): F(-13, 16), (7, 6): F(7, 2), (8, 8): F(-141, 128), (8, 6): F(1, 2)}
PRINTED_TAN = {(0, 0): F(1), (2, 2): F(1), (4, 4): F(3, 2), (5, 4): F(-2), (6, 6): F(5, 2),
               (7, 6): F(-8), (8, 8): F(35, 8), (8, 6): F(-1)}


@dataclass(frozen=True)
class CoefficientReport:
    """Exact comparison of a series against a printed coefficient table.

    ``extra`` lists computed terms absent from the table but within its
    degree range (in the first variable).
    """

    mismatches: tuple[tuple[tuple[int, ...], Fraction, Fraction], ...]
    extra: tuple[tuple[tuple[int, ...], Fraction], ...]
    checked: int

    @property
    def exact(self) -> bool:
        return not self.mismatches and not self.extra


def compare_coefficients(series: SeriesPoly, printed: dict) -> CoefficientReport:
    mism = tuple((e, c, series[e]) for e, c in sorted(printed.items()) if series[e] != c)
    top = max(e[0] for e in printed)
    extra = tuple((e, c) for e, c in series.terms() if e[0] <= top and e not in printed)
    return CoefficientReport(mism, extra, len(printed))


@lru_cache(maxsize=None)
def z_series(order: int = 11) -> SeriesPoly:
    """z(lam, mu) to ``lam**order`` by fixed-point iteration in exact arithmetic.

    Iterates ``z <- rhs(z) + (z - sin z)``; each pass fixes at least one more
    power of ``lam``.
    """
    if order < 0:
        raise DomainError("order must be >= 0")
    ring = lam_mu_ring(order)
    lam, mu = ring.var("lam"), ring.var("mu")
    lm2 = lam * lam * mu * mu
    z = ring.const(0)
    for _ in range(order + 4):
        rhs = lm2 / ((1 - lam * z) ** 2 - lm2)
        new = rhs + z - z.apply(sin_coefficients)
        if new == z:
            return new
        z = new
    raise ArithmeticError("z iteration did not stabilise")


def _rhs(z, lam, mu):
    lm = lam * mu
    return lm * lm / ((1 - lam * z) ** 2 - lm * lm)


@dataclass(frozen=True)
class ZResidualReport:
    mu: float
    lambdas: tuple[float, ...]
    residuals: tuple[float, ...]
    ratios: tuple[float, ...]       # residual(l_i) / residual(l_{i+1})
    order: int


def verify_z_series(mu: float, lambdas, order: int = 8, dps: int = 50) -> ZResidualReport:
    """Residual of the defining equation at the truncated series value."""
    z = z_series(order)
    res = []
    with mpmath.workdps(dps):
        m = mpmath.mpf(mu)
        for lam in lambdas:
            lam_ = mpmath.mpf(lam)
            if abs(lam_ * m) >= 1:
                raise DomainError(f"|lam*mu| must be < 1, got {float(lam_ * m)}")
            zv = z.evaluate(lambda c: mpmath.mpf(c.numerator) / c.denominator, lam=lam_, mu=m)
            res.append(float(abs(mpmath.sin(zv) - _rhs(zv, lam_, m))))
    ratios = tuple(res[i] / res[i + 1] if res[i + 1] else math.inf for i in range(len(res) - 1))
    return ZResidualReport(float(mu), tuple(float(x) for x in lambdas), tuple(res), ratios, order)


def exact_z(lam: float, mu: float, *, dps: int = 40) -> float:
    """Root of the defining equation near 0 by bisection (the series oracle)."""
    if lam == 0 or mu == 0:
        return 0.0
    if abs(lam * mu) >= 1:
        raise DomainError("need |lam*mu| < 1")
    with mpmath.workdps(dps):
        lam_, mu_ = mpmath.mpf(lam), mpmath.mpf(mu)
        f = lambda z: mpmath.sin(z) - _rhs(z, lam_, mu_)
        lo, hi = mpmath.mpf(0), mpmath.mpf(0.01)
        while f(hi) < 0:
            lo, hi = hi, 2 * hi
            if hi > mpmath.pi / 2:
                raise DomainError(f"no root below pi/2 for lam={lam}, mu={mu}")
        for _ in range(4 * dps):
            mid = (lo + hi) / 2
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def root_from_series(tag: BranchTag, mu: float, order: int = 11) -> float:
    """kappa for level ``tag.level`` at a = 1/2, xi = 2 mu, from the z series."""
    lam = lambda_of(tag)
    if abs(lam) * mu >= 1:
        warnings.warn(f"|lam| mu = {abs(lam) * mu:.3f} >= 1: series outside its useful range",
                      RuntimeWarning, stacklevel=2)
    z = z_series(order).evaluate(lam=lam, mu=mu)
    return (1 - lam * z) / abs(lam)


def first_omitted_term(tag: BranchTag, mu: float, order: int = 11) -> float:
    lam = lambda_of(tag)
    full, cut = z_series(order + 1), z_series(order)
    return abs(full.evaluate(lam=lam, mu=mu) - cut.evaluate(lam=lam, mu=mu))


@lru_cache(maxsize=None)
def tau_series(order: int = 5) -> tuple[SeriesPoly, SeriesPoly]:
    """(x, y) as series in tau = 1/(2m-1), mu, and inv_pi = 1/pi."""
    z = z_series(order)
    target = Ring(("tau", "mu", "inv_pi"), (1, 0, 0), order)
    tau, inv_pi = target.var("tau"), target.var("inv_pi")
    lam_y = inv_pi * tau * (1 + tau / 2).reciprocal()
    y = z.substitute(target, {"lam": lam_y})
    return y.map_variable("tau", -1), y


def tau_of(m: int) -> float:
    return 1.0 / (2 * m - 1)


def eval_tau(series: SeriesPoly, tau: float, mu: float) -> float:
    return series.evaluate(tau=tau, mu=mu, inv_pi=1 / math.pi)


def printed_tau_y() -> dict:
    return {e: (c if e[0] % 2 == 0 else -c) for e, c in PRINTED_TAU_X.items()}


def rho_ring(order: int) -> Ring:
    return Ring(("rho",), (1,), order)


def _sc_from_rho2(rho2: SeriesPoly, branch: str) -> tuple[SeriesPoly, SeriesPoly, SeriesPoly]:
    q = 1 - rho2 / 4
    p = 1 - rho2 / 2
    s = q.power(F(-1, 2))
    c = p.power(F(1, 2)) * s
    t = p.power(F(-1, 2))
    if branch == "y":
        c, t = -c, -t
    return s, c, t


def sc_expansions(order: int = 10, branch: str = "x") -> tuple[SeriesPoly, SeriesPoly, SeriesPoly]:
    """(sqrt2*S, sqrt2*C, S/C) in powers of rho; the y branch flips the sign of C."""
    if branch not in BRANCHES:
        raise DomainError(f"unknown branch {branch!r}")
    ring = rho_ring(order)
    rho = ring.var("rho")
    return _sc_from_rho2(rho * rho, branch)


def sc_closed(rho: float, branch: str = "x") -> tuple[float, float, float]:
    """Closed-form (sqrt2*S, sqrt2*C, S/C); S/C has a pole at rho^2 = 2."""
    r2 = rho * rho
    if r2 >= 2:
        raise DomainError(f"rho^2 = {r2} is at or beyond the pole at rho^2 = 2")
    s = 1 / math.sqrt(1 - r2 / 4)
    c = math.sqrt((1 - r2 / 2) / (1 - r2 / 4))
    t = 1 / math.sqrt(1 - r2 / 2)
    if branch == "y":
        c, t = -c, -t
    return s, c, t


def rho_squared_series(order: int, convention: str = BRANCH_CONVENTION) -> SeriesPoly:
    ring = lam_mu_ring(order)
    lam, mu = ring.var("lam"), ring.var("mu")
    z = z_series(order)
    if convention == BRANCH_CONVENTION:
        den = 1 - lam * z
    elif convention == PRINTED_CONVENTION:
        den = 1 + lam * z
    else:
        raise DomainError(f"unknown convention {convention!r}")
    return 4 * lam * lam * mu * mu * den.power(-2)


@lru_cache(maxsize=None)
def _matrix_series(order: int, branch: str, convention: str):
    return _sc_from_rho2(rho_squared_series(order, convention), branch)


def lambda_mu_matrix_elements(order: int = 8, branch: str = "x",
                              convention: str = BRANCH_CONVENTION) -> tuple[SeriesPoly, SeriesPoly]:
    """sqrt2*S and sqrt2*C at the root, as series in (lam, mu).

    ``convention="branch"`` substitutes rho = xi/kappa exactly;
    ``convention="printed"`` uses the sign of z that reproduces the
    displayed tables (see README).
    """
    s, c, _ = _matrix_series(order, branch, convention)
    return s, c


def tan_kappa_series(order: int = 8, branch: str = "x",
                     convention: str = BRANCH_CONVENTION) -> SeriesPoly:
    """S/C = tan(kappa/2) at the root as a series in (lam, mu)."""
    return _matrix_series(order, branch, convention)[2]


def cos_z_series(order: int = 8) -> SeriesPoly:
    """cos z(lam, mu); equals 2SC = sin kappa on the x branch."""
    return z_series(order).apply(cos_coefficients)


def matrix_elements_numeric(tag: BranchTag, mu: float) -> tuple[float, float]:
    """sqrt2 sin(kappa/2), sqrt2 cos(kappa/2) at the exact root, sign-fixed so
    that sqrt2*S > 0 (the overall sign of the pair is irrelevant)."""
    k = tag.base_kappa + (1 if tag.branch == "x" else -1) * exact_z(lambda_of(tag), mu)
    s, c = math.sqrt(2) * math.sin(k / 2), math.sqrt(2) * math.cos(k / 2)
    return (s, c) if s > 0 else (-s, -c)


# --- sigma expansion near a = 1/2 ------------------------------------------

def approx_secular_sigma(kappa, xi: float, sigma: float):
    """Second-order-in-sigma approximant of -2 D(kappa) at a = 1/2 + sigma/(2 kappa)."""
    k = np.asarray(kappa, dtype=float)
    s, c = np.sin(k), np.cos(k)
    out = np.sin(2 * k) + xi * xi / (2 * k * k) * (s * (1 - c) - sigma * (1 - c) - 0.5 * sigma ** 2 * s)
    return out[()] if out.ndim == 0 else out


def exact_secular_sigma(kappa, xi: float, sigma: float):
    """-2 D(kappa) with a = 1/2 + sigma/(2 kappa)."""
    k = np.asarray(kappa, dtype=float)
    out = np.sin(2 * k) + xi * xi / (2 * k * k) * np.sin(k + sigma) * (1 - np.cos(k - sigma))
    return out[()] if out.ndim == 0 else out


def _scan_roots(f, n_max: int, kmin: float, step: float = math.pi / 256) -> list[float]:
    kmax = (n_max + 1.5) * math.pi / 2
    grid = np.arange(kmin + step / 8, kmax, step)
    v = f(grid)
    roots = []
    for i in range(len(grid) - 1):
        if v[i] == 0:
            roots.append(float(grid[i]))
        elif v[i] * v[i + 1] < 0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
        if len(roots) == n_max:
            break
    if len(roots) < n_max:
        raise DomainError(f"only {len(roots)} real roots below {kmax}")
    return roots


def sigma_roots(xi: float, sigma: float, n_max: int, *, exact: bool = False) -> list[float]:
    """Lowest ``n_max`` real roots of the approximant (or of the exact function).

    Only kappa > |sigma| is physical (a = 1/2 + sigma/(2 kappa) in (0, 1));
    the approximant has a spurious root near xi^2 sigma / 8 below that.
    """
    fn = exact_secular_sigma if exact else approx_secular_sigma
    return _scan_roots(lambda k: fn(k, xi, sigma), n_max, abs(sigma))


def secular_half_minus2(kappa, xi: float):
    """-2 D(kappa) at a = 1/2 (reference for the sigma = 0 reduction)."""
    return -2 * secular_value(kappa, 0.5, xi)
