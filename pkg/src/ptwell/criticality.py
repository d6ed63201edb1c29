"""Exceptional points, unavoided crossings and the reality boundary xi_crit(a)."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .model import COMPLEX_PAIR, ConvergenceError, DomainError, MergerError, WellConfig
from .secular import (eval_secular, eval_secular_derivative, find_spectrum, hybrid_root,
                      real_roots_in)


class WindowTooSmallWarning(UserWarning):
    """The merging pair involves the highest tracked level."""


@dataclass(frozen=True)
class ExceptionalPoint:
    nu0: float
    mu0: float
    xi_crit: float
    level_pair: tuple[int, int]

    def residuals(self) -> tuple[float, float]:
        """Residuals of the two coupled tangency conditions."""
        nu, m2 = self.nu0, self.mu0 ** 2
        q = nu * nu - m2
        return (math.cos(nu) + m2 / q, -math.sin(nu) - 2 * m2 * nu / (q * q))


def _reduced(nu: float) -> float:
    return nu - 2 * math.tan(nu / 2) * math.cos(nu)


def _reduced_prime(nu: float) -> float:
    t = math.tan(nu / 2)
    return 1 - (1 + t * t) * math.cos(nu) + 2 * t * math.sin(nu)


def solve_exceptional_half() -> ExceptionalPoint:
    """Lowest exceptional point at a = 1/2 (merger of levels 2 and 3)."""
    lo, hi = math.pi * (1 + 1e-9), 1.5 * math.pi
    nu = hybrid_root(_reduced, _reduced_prime, lo, hi, xtol=1e-15).kappa
    mu0 = math.sqrt(-2 * nu * math.cos(nu) ** 2 / math.sin(nu))
    ep = ExceptionalPoint(nu, mu0, 2 * mu0, (2, 3))
    if max(abs(r) for r in ep.residuals()) > 1e-12:
        raise ConvergenceError(f"tangency residuals too large: {ep.residuals()}")
    return ep


def crossing_strength(m: int) -> float:
    """Coupling at which levels 4m-3 and 4m-2 cross at a = 1/2."""
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    return math.sqrt(2) * math.pi * (2 * int(m) - 1)


def _merged(a: float, xi: float, window: int) -> bool:
    try:
        find_spectrum(WellConfig(a, xi), window)
    except MergerError:
        return True
    return False


def merging_levels(a: float, xi: float, window: int) -> tuple[int, ...]:
    """Indices of complex levels among the first ``window`` at (a, xi)."""
    levels = find_spectrum(WellConfig(a, xi), window, allow_complex=True)
    return tuple(r.n for r in levels if r.regime == COMPLEX_PAIR)


def critical_coupling(a: float, level_window: int = 8, *, step: float = 0.05,
                      xi_max: float = 60.0, tol: float = 1e-9) -> float:
    """Smallest xi at which some of the first ``level_window`` levels leave the real axis.

    A coarse sweep in ``step`` finds the first merged grid point, then
    bisection narrows the switch to ``tol``.  Emits
    :class:`WindowTooSmallWarning` if the merging pair reaches the top of the
    window, since a merger just above it could then come earlier.
    """
    a = float(a)
    if not 0.0 < a < 1.0:
        raise DomainError(f"a must lie in (0, 1), got {a}")
    if level_window < 2:
        raise DomainError("level_window must be >= 2")
    lo = 0.0
    hi = step
    while not _merged(a, hi, level_window):
        lo = hi
        hi += step
        if hi > xi_max:
            raise ConvergenceError(f"no merger below xi={xi_max} for a={a}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _merged(a, mid, level_window):
            hi = mid
        else:
            lo = mid
    xi_c = 0.5 * (lo + hi)
    try:
        levels = merging_levels(a, hi + 10 * tol, level_window)
    except (MergerError, ConvergenceError):
        levels = ()
    if not levels or max(levels) >= level_window:
        warnings.warn(f"merger at xi={xi_c:.9f} (a={a}) involves the top of the "
                      f"{level_window}-level window; boundary may be underestimated",
                      WindowTooSmallWarning, stacklevel=2)
    return xi_c


def _cc_worker(args):
    a, window = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WindowTooSmallWarning)
        try:
            return critical_coupling(a, window)
        except ConvergenceError:
            return math.nan


@dataclass(frozen=True)
class CriticalCurve:
    a_values: tuple[float, ...]
    xi_crit: tuple[float, ...]     # nan where no merger was found
    jumps: tuple[int, ...]          # indices i with |xi[i+1] - xi[i]| > jump_limit


def critical_curve(a_values, level_window: int = 8, *, workers: int = 1,
                   jump_limit: float = 0.5) -> CriticalCurve:
    """critical_coupling over a grid of a; points are independent."""
    a_values = tuple(float(a) for a in a_values)
    jobs = [(a, level_window) for a in a_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            xs = tuple(pool.map(_cc_worker, jobs))
    else:
        xs = tuple(_cc_worker(j) for j in jobs)
    jumps = tuple(i for i in range(len(xs) - 1) if abs(xs[i + 1] - xs[i]) > jump_limit)
    return CriticalCurve(a_values, xs, jumps)


@dataclass(frozen=True)
class CrossingReport:
    m: int
    xi: float
    kappa_target: float
    roots: tuple[float, float]
    sin_factor: float
    coupling_factor: float
    below: tuple[float, float]
    above: tuple[float, float]
    secular_at_target: float

    @property
    def deviation(self) -> float:
        return max(abs(r - self.kappa_target) for r in self.roots)

    @property
    def ok(self) -> bool:
        k = self.kappa_target
        return (self.deviation < 1e-10 and abs(self.sin_factor) < 1e-12
                and abs(self.coupling_factor) < 1e-12 and abs(self.secular_at_target) < 1e-12
                and self.below[0] < k < self.below[1] and self.above[1] - self.above[0] > 1e-6)


def _pair_near(xi: float, k: float) -> tuple[float, float]:
    roots = real_roots_in(WellConfig(0.5, xi), k - 0.5 * math.pi, k + 0.5 * math.pi)
    roots.sort(key=lambda r: abs(r - k))
    if len(roots) < 2:
        raise MergerError(f"fewer than two real roots near kappa={k} at xi={xi}",
                          found=len(roots), requested=2)
    return tuple(sorted(roots[:2]))


def verify_crossing(m: int, *, offset: float = 0.01) -> CrossingReport:
    """Check the crossing of levels 4m-3 and 4m-2 at kappa = (2m-1) pi, a = 1/2."""
    xi = crossing_strength(m)
    k = (2 * m - 1) * math.pi
    cfg = WellConfig(0.5, xi)
    return CrossingReport(
        m=int(m), xi=xi, kappa_target=k,
        roots=_pair_near(xi, k),
        sin_factor=math.sin(k),
        coupling_factor=math.cos(k) + xi * xi / (4 * k * k) * (1 - math.cos(k)),
        below=_pair_near(xi - offset, k),
        above=_pair_near(xi + offset, k),
        secular_at_target=eval_secular(cfg, k),
    )


def exceptional_point_check(ep: ExceptionalPoint) -> tuple[float, float]:
    """|D| and |D'| at (nu0, xi_crit) on the a = 1/2 secular function."""
    cfg = WellConfig(0.5, ep.xi_crit)
    return abs(eval_secular(cfg, ep.nu0)), abs(eval_secular_derivative(cfg, ep.nu0))
