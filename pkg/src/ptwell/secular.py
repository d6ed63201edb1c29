"""Secular determinant D(kappa), its real roots and their complex continuation.

    D(k) = -1/2 [ sin 2k + (xi/k)^2 sin(2ka) sin^2(k(1-a)) ]

At ``a = 1/2`` the same function factorizes exactly into
``-sin k [cos k + (xi^2 / 4k^2)(1 - cos k)]``; that form is used for
evaluation there because it keeps full relative accuracy next to the double
roots at the level crossings.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import (COMPLEX_PAIR, REAL, ContinuationError, ConvergenceError, DomainError,
                    MergerError, SpectralRoot, WellConfig)

SCAN_STEP = math.pi / 64
TANGENT_TOL = 1e-8
DOUBLE_ROOT_TOL = 1e-12
ROOT_TOL = 1e-12
BISECT_WIDTH = 1e-6
MAX_ITER = 200


def _is_half(a: float) -> bool:
    return a == 0.5


def secular_value(kappa, a: float, xi: float):
    """D(kappa) for scalar or array, real or complex, input (no domain check)."""
    k = np.asarray(kappa)
    if _is_half(a):
        out = -np.sin(k) * (np.cos(k) + xi * xi / (4.0 * k * k) * (1.0 - np.cos(k)))
    else:
        b = 1.0 - a
        out = -0.5 * (np.sin(2 * k) + (xi * xi / (k * k)) * np.sin(2 * k * a) * np.sin(k * b) ** 2)
    return out[()] if out.ndim == 0 else out


def secular_derivative(kappa, a: float, xi: float):
    """Analytic dD/dkappa."""
    k = np.asarray(kappa)
    if _is_half(a):
        s, c = np.sin(k), np.cos(k)
        m2 = xi * xi / 4.0
        g = c + m2 / (k * k) * (1.0 - c)
        dg = -s - 2 * m2 / k ** 3 * (1.0 - c) + m2 / (k * k) * s
        out = -(c * g + s * dg)
    else:
        b = 1.0 - a
        p = np.sin(2 * k * a) * np.sin(k * b) ** 2
        dp = 2 * a * np.cos(2 * k * a) * np.sin(k * b) ** 2 + b * np.sin(2 * k * a) * np.sin(2 * k * b)
        out = -0.5 * (2 * np.cos(2 * k) + xi * xi * (-2.0 * p / k ** 3 + dp / (k * k)))
    return out[()] if out.ndim == 0 else out


def secular_second_derivative(kappa, a: float, xi: float, h: float = 1e-5):
    return (secular_derivative(kappa + h, a, xi) - secular_derivative(kappa - h, a, xi)) / (2 * h)


def eval_secular(config: WellConfig, kappa: float) -> float:
    kappa = float(kappa)
    if not kappa > 0:
        raise DomainError(f"secular function needs kappa > 0 (kappa=0 is spurious), got {kappa}")
    return float(secular_value(kappa, config.a, config.xi))


def eval_secular_derivative(config: WellConfig, kappa: float) -> float:
    kappa = float(kappa)
    if not kappa > 0:
        raise DomainError(f"secular function needs kappa > 0, got {kappa}")
    return float(secular_derivative(kappa, config.a, config.xi))


def eval_secular_complex(config: WellConfig, kappa: complex) -> complex:
    kappa = complex(kappa)
    if kappa == 0:
        raise DomainError("secular function is undefined at kappa = 0")
    return complex(secular_value(np.complex128(kappa), config.a, config.xi))


def _dsec_complex(config: WellConfig, kappa: complex) -> complex:
    return complex(secular_derivative(np.complex128(kappa), config.a, config.xi))


@dataclass(frozen=True)
class RefinedRoot:
    kappa: float
    residual: float
    width: float
    iterations: int


def hybrid_root(f, fprime, lo: float, hi: float, *, bisect_width: float = BISECT_WIDTH,
                xtol: float = ROOT_TOL, max_iter: int = MAX_ITER) -> RefinedRoot:
    """Bisection down to ``bisect_width``, then Newton kept inside the bracket.

    A Newton step that leaves the bracket (or fails to halve |f|) is replaced
    by a bisection step.  On convergence the bracket is tightened around the
    root so that the reported width is below ``xtol``.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return RefinedRoot(lo, 0.0, 0.0, 0)
    if fhi == 0:
        return RefinedRoot(hi, 0.0, 0.0, 0)
    if flo * fhi > 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    it = 0
    while hi - lo > bisect_width and it < max_iter:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        it += 1
        if fm == 0:
            return RefinedRoot(mid, 0.0, 0.0, it)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    x = 0.5 * (lo + hi)
    fx = f(x)
    while it < max_iter:
        it += 1
        if fx == 0:
            return RefinedRoot(x, 0.0, 0.0, it)
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        d = fprime(x)
        step = fx / d if d != 0 else math.inf
        xn = x - step
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        fn = f(xn)
        if abs(fn) > 0.5 * abs(fx) and hi - lo > xtol:
            xb = 0.5 * (lo + hi)
            fb = f(xb)
            if abs(fb) < abs(fn):
                xn, fn = xb, fb
        converged = abs(xn - x) <= max(1e-3 * xtol, 4 * math.ulp(x)) or hi - lo <= 4 * math.ulp(x)
        x, fx = xn, fn
        if converged:
            break
    else:
        raise ConvergenceError(f"root refinement did not converge on [{lo}, {hi}]")
    # Tighten the bracket around x; fall back to plain bisection if the
    # probes do not straddle the root.
    delta = max(0.4 * xtol, 4 * math.ulp(x))
    fa, fb = f(x - delta), f(x + delta)
    if fa == 0 or fb == 0 or (fa < 0) != (fb < 0):
        lo, hi = x - delta, x + delta
    else:
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0:
                lo = hi = mid
                break
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        x = 0.5 * (lo + hi)
    return RefinedRoot(x, abs(f(x)), hi - lo, it)


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    hint_index: int


@dataclass(frozen=True)
class Extremum:
    """Interior extremum of D on the real axis.

    ``gap`` is True when the extremum fails to reach zero (a local maximum
    below zero or a local minimum above it): a pair of levels is missing
    from the real axis there.
    """

    kappa: float
    value: float
    curvature: float

    @property
    def gap(self) -> bool:
        return self.value * self.curvature > 0


@dataclass(frozen=True)
class Tangency:
    kappa: float
    value: float
    sign_change: bool
    double_root: bool


@dataclass(frozen=True)
class RootScan:
    config: WellConfig
    kappa_min: float
    kappa_max: float
    brackets: tuple[RootBracket, ...]
    tangencies: tuple[Tangency, ...]
    extrema: tuple[Extremum, ...]

    @property
    def merger(self) -> bool:
        return bool(self.tangencies)

    @property
    def double_roots(self) -> tuple[Tangency, ...]:
        return tuple(t for t in self.tangencies if t.double_root)

    @property
    def real_count(self) -> int:
        return len(self.brackets) + 2 * len(self.double_roots)

    def __iter__(self):
        return iter(self.brackets)

    def __len__(self) -> int:
        return len(self.brackets)


def _sgn(v: float) -> int:
    return 1 if v >= 0 else -1


def bracket_roots(config: WellConfig, kappa_max: float, *, kappa_min: float = 0.0,
                  step: float = SCAN_STEP, tangent_tol: float = TANGENT_TOL,
                  double_tol: float = DOUBLE_ROOT_TOL) -> RootScan:
    """Sign-change brackets of D on (kappa_min, kappa_max].

    Every grid cell in which D' changes sign is split at the refined
    extremum, so two roots closer than the grid spacing are still separated.
    Extrema with |D| <= ``tangent_tol`` are reported as tangencies (root
    merger or crossing); those without a sign change and |D| <= ``double_tol``
    are double roots.
    """
    if not kappa_max > 0 or kappa_max <= kappa_min:
        raise DomainError("need 0 <= kappa_min < kappa_max")
    a, xi = config.a, config.xi
    start = kappa_min if kappa_min > 0 else step / 8
    n_cells = max(1, int(math.ceil((kappa_max - start) / step)))
    grid = np.linspace(start, kappa_max, n_cells + 1)
    d = secular_value(grid, a, xi)
    dp = secular_derivative(grid, a, xi)
    deriv = lambda k: float(secular_derivative(k, a, xi))
    value = lambda k: float(secular_value(k, a, xi))

    points: list[float] = [float(grid[0])]
    values: list[float] = [float(d[0])]
    ext_index: dict[int, Extremum] = {}
    for i in range(n_cells):
        k0, k1 = float(grid[i]), float(grid[i + 1])
        if dp[i] == 0 or dp[i] * dp[i + 1] < 0:
            ks = k0 if dp[i] == 0 else brentq(deriv, k0, k1, xtol=1e-15, rtol=1e-15, maxiter=200)
            if k0 < ks < k1:
                dv = value(ks)
                ext_index[len(points)] = Extremum(ks, dv, float(secular_second_derivative(ks, a, xi)))
                points.append(ks)
                values.append(dv)
        points.append(k1)
        values.append(float(d[i + 1]))

    brackets: list[RootBracket] = []
    sign_cells: set[int] = set()
    for j in range(len(points) - 1):
        if _sgn(values[j]) != _sgn(values[j + 1]):
            lo, hi = points[j], points[j + 1]
            brackets.append(RootBracket(lo, hi, max(1, round(0.5 * (lo + hi) / (math.pi / 2)))))
            sign_cells.add(j)

    tangencies = []
    for j, ext in ext_index.items():
        if abs(ext.value) <= tangent_tol:
            changed = (j - 1) in sign_cells or j in sign_cells
            tangencies.append(Tangency(ext.kappa, ext.value, changed,
                                       (not changed) and abs(ext.value) <= double_tol))
    return RootScan(config, kappa_min, kappa_max, tuple(brackets), tuple(tangencies),
                    tuple(ext_index[j] for j in sorted(ext_index)))


def refine_bracket(config: WellConfig, bracket: RootBracket) -> RefinedRoot:
    a, xi = config.a, config.xi
    return hybrid_root(lambda k: float(secular_value(k, a, xi)),
                       lambda k: float(secular_derivative(k, a, xi)),
                       bracket.lo, bracket.hi)


def complex_newton(config: WellConfig, seed: complex, *, tol: float = 1e-13,
                   max_iter: int = 80) -> complex:
    k = complex(seed)
    for _ in range(max_iter):
        dv = eval_secular_complex(config, k)
        if abs(dv) < tol:
            return k
        dd = _dsec_complex(config, k)
        if dd == 0:
            break
        step = dv / dd
        k -= step
        if abs(step) < 1e-15 * abs(k):
            return k
    if abs(eval_secular_complex(config, k)) < 1e-10:
        return k
    raise ConvergenceError(f"complex Newton failed from seed {seed}")


def quadratic_seed(config: WellConfig, kappa_star: float) -> tuple[complex, complex]:
    """Pair of roots predicted by the local quadratic model of D at an extremum."""
    a, xi = config.a, config.xi
    dv = float(secular_value(kappa_star, a, xi))
    d2 = float(secular_second_derivative(kappa_star, a, xi))
    q = -2.0 * dv / d2
    r = cmath.sqrt(q)
    return kappa_star - r, kappa_star + r


def complex_roots_from_scan(scan: RootScan, wanted_pairs: int) -> list[complex]:
    """Upper-half-plane roots seeded from the gap extrema of a scan."""
    found: list[complex] = []
    config = scan.config
    for ext in sorted(scan.extrema, key=lambda e: abs(e.value)):
        if len(found) >= wanted_pairs:
            break
        if not ext.gap:
            continue
        _, seed = quadratic_seed(config, ext.kappa)
        if seed.imag <= 0:
            continue
        try:
            k = complex_newton(config, seed)
        except ConvergenceError:
            continue
        if k.imag < 0:
            k = k.conjugate()
        if k.imag <= 1e-10 * abs(k) or k.real <= 0:
            continue
        if all(abs(k - other) > 1e-8 * abs(k) for other in found):
            found.append(k)
    return sorted(found, key=lambda z: z.real)


def window_size(n_max: int, xi: float) -> int:
    """Number of unperturbed levels scanned so that the top of the window is
    barely displaced (shift ~ xi^2 / 4k^2 far below the quarter-period gap)."""
    return max(n_max + 8, int(math.ceil(3.2 * xi / math.pi)) + 2)


def find_spectrum(config: WellConfig, n_max: int, *, allow_complex: bool = False) -> list[SpectralRoot]:
    """The ``n_max`` lowest levels, ordered by Re(kappa).

    Real roots are refined to |D| < 1e-12; real double roots (crossings)
    come back as two equal entries flagged ``degenerate``.  If any of the
    requested levels has complexified a :class:`MergerError` is raised,
    unless ``allow_complex`` is set, in which case conjugate pairs are
    located by complex Newton from the gap extrema and included.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    n_big = window_size(n_max, config.xi)
    k_big = (n_big + 0.5) * math.pi / 2
    scan = bracket_roots(config, k_big)

    entries: list[tuple[complex, bool]] = []
    for br in scan.brackets:
        r = refine_bracket(config, br)
        if r.residual >= ROOT_TOL:
            raise ConvergenceError(f"root near {r.kappa} has residual {r.residual:.3e}")
        entries.append((complex(r.kappa), False))
    for t in scan.double_roots:
        entries += [(complex(t.kappa), True), (complex(t.kappa), True)]
    entries.sort(key=lambda e: e[0].real)
    # Two simple roots closer than 1e-8 are a crossing as well.
    for i in range(len(entries) - 1):
        if abs(entries[i + 1][0] - entries[i][0]) < 1e-8:
            entries[i] = (entries[i][0], True)
            entries[i + 1] = (entries[i + 1][0], True)

    missing = n_big - len(entries)
    complex_entries: list[complex] = []
    if missing > 0:
        complex_entries = complex_roots_from_scan(scan, (missing + 1) // 2)
    levels: list[tuple[complex, str, bool]] = [(k, REAL, deg) for k, deg in entries]
    for k in complex_entries:
        levels += [(k.conjugate(), COMPLEX_PAIR, False), (k, COMPLEX_PAIR, False)]
    levels.sort(key=lambda e: (e[0].real, e[0].imag))

    if len(levels) >= n_big:
        reliable = len(levels)
    else:
        # Unresolved gaps: indices are only trustworthy below the first one.
        gaps = [e.kappa for e in scan.extrema if e.gap]
        first = min(gaps) if gaps else math.inf
        reliable = sum(1 for k, _, _ in levels if k.real < first)
    head = levels[:n_max]
    has_complex = any(r == COMPLEX_PAIR for _, r, _ in head)
    if len(head) < n_max or reliable < n_max or (has_complex and not allow_complex):
        n_real = sum(1 for _, r, _ in head if r == REAL)
        raise MergerError(
            f"only {n_real} of the lowest {n_max} levels are real at a={config.a}, "
            f"xi={config.xi}; use complex continuation",
            found=n_real, requested=n_max,
            merger_kappas=tuple(e.kappa for e in scan.extrema if e.gap))
    return [SpectralRoot(i + 1, k if r == COMPLEX_PAIR else complex(k.real), r, deg)
            for i, (k, r, deg) in enumerate(head)]


def real_roots_in(config: WellConfig, kappa_min: float, kappa_max: float) -> list[float]:
    """All real roots (double roots repeated) inside a window."""
    scan = bracket_roots(config, kappa_max, kappa_min=kappa_min)
    out = [refine_bracket(config, br).kappa for br in scan.brackets]
    for t in scan.double_roots:
        out += [t.kappa, t.kappa]
    return sorted(out)


def _extremum_between(config: WellConfig, lo: float, hi: float, center: float) -> float:
    a, xi = config.a, config.xi
    deriv = lambda k: float(secular_derivative(k, a, xi))
    if lo < hi and deriv(lo) * deriv(hi) < 0:
        return brentq(deriv, lo, hi, xtol=1e-15, rtol=1e-15)
    w = 0.01
    while w < 1.0:
        l_, h_ = max(center - w, 1e-6), center + w
        if deriv(l_) * deriv(h_) < 0:
            return brentq(deriv, l_, h_, xtol=1e-15, rtol=1e-15)
        w *= 1.5
    raise ConvergenceError(f"no extremum of D near kappa={center}")


def _locate_pair(config: WellConfig, prev: tuple[complex, complex]) -> tuple[complex, complex]:
    """Both members of the pair that was at ``prev`` (real or conjugate)."""
    a, xi = config.a, config.xi
    k1, k2 = prev
    center = 0.5 * (k1 + k2).real
    if k1.imag == 0 and k1 != k2:
        lo, hi = sorted((k1.real, k2.real))
        pad = 0.1 * (hi - lo)
        ks = _extremum_between(config, lo - pad, hi + pad, center)
    else:
        ks = _extremum_between(config, center, center, center)
    dv = float(secular_value(ks, a, xi))
    if abs(dv) <= DOUBLE_ROOT_TOL:
        return complex(ks), complex(ks)
    s1, s2 = quadratic_seed(config, ks)
    if s1.imag == 0 and s2.imag == 0:
        f = lambda k: float(secular_value(k, a, xi))
        fp = lambda k: float(secular_derivative(k, a, xi))
        roots = []
        for s in (s1.real, s2.real):
            direction = 1.0 if s > ks else -1.0
            width = max(abs(s - ks), 1e-12)
            end = ks + direction * width
            for _ in range(60):
                if _sgn(f(end)) != _sgn(dv):
                    break
                width *= 1.5
                end = ks + direction * width
            else:
                raise ConvergenceError(f"lost real root next to extremum {ks}")
            lo_, hi_ = sorted((ks, end))
            roots.append(complex(hybrid_root(f, fp, lo_, hi_).kappa))
        roots.sort(key=lambda z: z.real)
        return roots[0], roots[1]
    k = complex_newton(config, s2 if s2.imag > 0 else s1)
    if k.imag < 0:
        k = k.conjugate()
    return k.conjugate(), k


def track_complex_pair(config_path: list[WellConfig], seed: tuple[SpectralRoot, SpectralRoot],
                       *, max_halvings: int = 12,
                       max_shift: float = 0.3) -> list[tuple[SpectralRoot, SpectralRoot]]:
    """Continue an adjacent, near-degenerate real pair along increasing ``xi``.

    At every step the pair is re-located from the real extremum of D that
    separates its members: the local quadratic model seeds either two real
    roots or a conjugate pair, polished by bracketed refinement or complex
    Newton.  Only the upper member of a complex pair is solved for; the
    partner is its exact conjugate.  A step whose pair centre moves by more
    than ``max_shift`` is retried with the increment in ``xi`` halved.
    """
    if not config_path:
        return []
    a = config_path[0].a
    if any(c.a != a for c in config_path):
        raise DomainError("continuation path must keep a fixed")
    xis = [c.xi for c in config_path]
    if any(x2 < x1 for x1, x2 in zip(xis, xis[1:])):
        raise DomainError("continuation path must have non-decreasing xi")
    n1, n2 = sorted((seed[0].n, seed[1].n))
    prev = tuple(sorted((seed[0].kappa, seed[1].kappa), key=lambda z: (z.real, z.imag)))
    current = xis[0]
    out = []
    for target in xis:
        x_try = target
        fails = 0
        while True:
            cfg = WellConfig(a, x_try)
            try:
                r1, r2 = _locate_pair(cfg, prev)
                shift = abs(0.5 * (r1 + r2).real - 0.5 * (prev[0] + prev[1]).real)
                ok = shift <= max_shift and abs(eval_secular_complex(cfg, r2)) < 1e-10
            except (ConvergenceError, ValueError):
                ok = False
            if ok:
                prev, current = (r1, r2), x_try
                if x_try == target:
                    break
                x_try, fails = target, 0
                continue
            fails += 1
            if fails > max_halvings:
                raise ContinuationError(f"step halving exhausted between xi={current} and {x_try}")
            x_try = current + 0.5 * (x_try - current)
        r1, r2 = prev
        if r1.imag == 0 and r2.imag == 0:
            deg = r1 == r2
            pair = (SpectralRoot(n1, complex(r1.real), REAL, deg),
                    SpectralRoot(n2, complex(r2.real), REAL, deg))
        else:
            pair = (SpectralRoot(n1, r1, COMPLEX_PAIR), SpectralRoot(n2, r2, COMPLEX_PAIR))
        out.append(pair)
    return out
