"""Matching system, amplitude vectors and piecewise wave functions.

A bound state is written on the three subintervals as

    psi_L = (alpha - i beta) sin k(x+1)          on (-1, -a)
    psi_C = gamma cos kx + i delta sin kx         on (-a, a)
    psi_R = (alpha + i beta) sin k(1-x)           on (a, 1)

with real amplitudes, which makes ``psi(-x) = conj(psi(x))`` automatic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (DegenerateFormulaError, DomainError, ExceptionalPointError, SpectralRoot,
                    WaveCoeffs, WellConfig)
from .secular import eval_secular

ROOT_RESIDUAL_TOL = 1e-9
MATCH_TOL = 1e-10
DENOM_TOL = 1e-8
SPECIAL_TOL = 1e-9


@dataclass(frozen=True)
class MatchingMatrix:
    entries: np.ndarray
    kappa: float
    config: WellConfig

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.entries))

    def residual(self, coeffs: WaveCoeffs) -> float:
        """Max-norm of M v relative to max(1, |v|_inf)."""
        v = np.array(coeffs.as_tuple())
        return float(np.max(np.abs(self.entries @ v)) / max(1.0, np.max(np.abs(v))))


def matching_matrix(config: WellConfig, kappa: float) -> MatchingMatrix:
    kappa = float(kappa)
    if not kappa > 0:
        raise DomainError(f"matching matrix needs kappa > 0, got {kappa}")
    a = config.a
    s, c = math.sin(kappa * (1 - a)), math.cos(kappa * (1 - a))
    ca, sa = math.cos(kappa * a), math.sin(kappa * a)
    r = config.xi / kappa
    m = np.array([
        [s, 0.0, -ca, 0.0],
        [0.0, s, 0.0, -sa],
        [-c, r * s, sa, 0.0],
        [r * s, c, 0.0, ca],
    ])
    return MatchingMatrix(m, kappa, config)


def _normalize(v: np.ndarray, route: str) -> WaveCoeffs:
    alpha, beta, gamma, delta = (float(t) for t in v)
    scale = max(abs(t) for t in v)
    if scale == 0:
        raise ArithmeticError("zero amplitude vector")
    tiny = 1e-12 * scale
    for name, val in (("alpha", alpha), ("delta", delta), ("gamma", gamma)):
        if abs(val) > tiny:
            break
    else:
        name, val = "beta", beta
    f = 1.0 / val
    clean = [0.0 if abs(t) <= tiny else t * f for t in (alpha, beta, gamma, delta)]
    return WaveCoeffs(*clean, norm_convention=f"{name}=1", route=route)


def _stin(config: WellConfig, k: float) -> np.ndarray:
    a, r = config.a, config.xi / k
    s, sk = math.sin(k * (1 - a)), math.sin(k)
    if abs(s) < DENOM_TOL or abs(sk) < DENOM_TOL:
        raise DegenerateFormulaError("sin k or sin k(1-a) vanishes")
    ca, sa = math.cos(k * a), math.sin(k * a)
    gamma = 1.0
    alpha = ca / s * gamma
    delta = -r * ca * s / sk * gamma
    beta = sa / s * delta
    return np.array([alpha, beta, gamma, delta])


def _osel(config: WellConfig, k: float) -> np.ndarray:
    a, r = config.a, config.xi / k
    s, ck = math.sin(k * (1 - a)), math.cos(k)
    if abs(s) < DENOM_TOL or abs(ck) < DENOM_TOL:
        raise DegenerateFormulaError("cos k or sin k(1-a) vanishes")
    ca, sa = math.cos(k * a), math.sin(k * a)
    delta = 1.0
    gamma = r * sa * s / ck * delta
    beta = sa / s * delta
    alpha = ca / s * gamma
    return np.array([alpha, beta, gamma, delta])


def _same_ray(u: np.ndarray, v: np.ndarray) -> bool:
    """True when u and v are parallel to 1e-10 (relative)."""
    u = u / np.max(np.abs(u))
    v = v / np.max(np.abs(v))
    i = int(np.argmax(np.abs(u)))
    v = v * (u[i] / v[i]) if v[i] != 0 else v
    return bool(np.max(np.abs(u - v)) < 1e-10)


def _half(config: WellConfig, k: float) -> tuple[np.ndarray, str]:
    j = round(k / math.pi)
    if j >= 1 and abs(k - j * math.pi) <= SPECIAL_TOL * k:
        if j % 2 == 0:
            return np.array([0.0, -1.0, 0.0, 1.0]), "half-S0"
        return np.array([0.0, 1.0, -config.xi / k, 1.0]), "half-C0"
    t = math.tan(k / 2)
    bd = -config.xi / (2 * k) * t
    return np.array([1.0, bd, t, bd]), "half"


def _svd_null(mm: MatchingMatrix) -> np.ndarray:
    _, sv, vt = np.linalg.svd(mm.entries)
    if sv[2] <= 1e-8 * sv[0]:
        raise ExceptionalPointError(
            f"two-dimensional null space at kappa={mm.kappa} (double root)")
    return vt[-1]


def coefficients(config: WellConfig, root: SpectralRoot) -> WaveCoeffs:
    """Amplitudes (alpha, beta, gamma, delta) of the eigenstate at ``root``.

    Closed formulas are tried first; the route actually used is recorded in
    the result.  Double roots raise :class:`ExceptionalPointError`.
    """
    if not root.is_real:
        raise DomainError("coefficients are defined for real-regime roots only")
    if root.degenerate:
        raise ExceptionalPointError(f"level {root.n} sits on a double root kappa={root.kappa.real}")
    k = root.kappa.real
    d = eval_secular(config, k)
    if abs(d) > ROOT_RESIDUAL_TOL:
        raise DomainError(f"kappa={k} is not a root: |D|={abs(d):.3e}")
    mm = matching_matrix(config, k)

    candidates = []
    if config.a == 0.5:
        candidates.append(_half(config, k))
    try:
        v = _stin(config, k)
        try:
            if not _same_ray(v, _osel(config, k)):
                raise ArithmeticError(f"closed formula sets disagree at kappa={k}")
        except DegenerateFormulaError:
            pass
        candidates.append((v, "stin"))
    except DegenerateFormulaError:
        try:
            candidates.append((_osel(config, k), "osel"))
        except DegenerateFormulaError:
            pass
    for v, route in candidates:
        out = _normalize(v, route)
        if mm.residual(out) < MATCH_TOL:
            return out
    out = _normalize(_svd_null(mm), "svd")
    if mm.residual(out) >= MATCH_TOL:
        raise ArithmeticError(f"matching residual {mm.residual(out):.2e} at kappa={k}")
    return out


# Each piece is psi = A sin(kx) + B cos(kx) on [lo, hi].

@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    A: complex
    B: complex


def pieces(coeffs: WaveCoeffs, kappa: float, config: WellConfig) -> tuple[Piece, Piece, Piece]:
    al, be, ga, de = coeffs.as_tuple()
    a = config.a
    ck, sk = math.cos(kappa), math.sin(kappa)
    zl, zr = complex(al, -be), complex(al, be)
    return (Piece(-1.0, -a, zl * ck, zl * sk),
            Piece(-a, a, 1j * de, complex(ga)),
            Piece(a, 1.0, -zr * ck, zr * sk))


def _select(x: np.ndarray, a: float, side: str) -> np.ndarray:
    if side == "inner":
        return np.where(x < -a, 0, np.where(x > a, 2, 1))
    if side == "left":
        return np.where(x <= -a, 0, np.where(x <= a, 1, 2))
    if side == "right":
        return np.where(x < -a, 0, np.where(x < a, 1, 2))
    raise ValueError(f"side must be 'inner', 'left' or 'right', got {side!r}")


def _check_x(x: np.ndarray) -> None:
    if np.any(np.abs(x) > 1.0) or not np.all(np.isfinite(x)):
        raise DomainError("x must lie in [-1, 1]")


def eval_wavefunction(coeffs: WaveCoeffs, kappa: float, config: WellConfig, x, *,
                      side: str = "inner"):
    xa = np.asarray(x, dtype=float)
    _check_x(xa)
    al, be, ga, de = coeffs.as_tuple()
    k = float(kappa)
    left = complex(al, -be) * np.sin(k * (xa + 1))
    centre = ga * np.cos(k * xa) + 1j * de * np.sin(k * xa)
    right = complex(al, be) * np.sin(k * (1 - xa))
    out = np.choose(_select(xa, config.a, side), [left, centre, right])
    return complex(out) if out.ndim == 0 else out


def eval_derivative(coeffs: WaveCoeffs, kappa: float, config: WellConfig, x, *,
                    side: str = "inner"):
    """psi'(x); at x = +-a choose the one-sided limit with ``side``."""
    xa = np.asarray(x, dtype=float)
    _check_x(xa)
    al, be, ga, de = coeffs.as_tuple()
    k = float(kappa)
    left = k * complex(al, -be) * np.cos(k * (xa + 1))
    centre = -k * ga * np.sin(k * xa) + 1j * k * de * np.cos(k * xa)
    right = -k * complex(al, be) * np.cos(k * (1 - xa))
    out = np.choose(_select(xa, config.a, side), [left, centre, right])
    return complex(out) if out.ndim == 0 else out
