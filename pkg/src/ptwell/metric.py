"""Biorthogonal eigensystem and positive metrics for the unbroken regime.

Right states are scaled to unit norm.  Left states are
``|n>> = q_n P |n>`` with ``q_n = 1/p_n`` and ``p_n = <n|P|n>``, so that
``<<n|m> = delta_nm``.  Operators on the span of the first N right states are
stored as N x N arrays in that (non-orthogonal) basis:

* a sesquilinear form ``A`` has entries ``<m|A|k>``;
* a linear map has coordinate matrix ``C`` with ``A|k> = sum_n |n> C[n, k]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .eigenstates import Piece, coefficients, pieces
from .model import (ConvergenceError, DegeneracyError, DomainError, ExceptionalPointError,
                    IntegrationConsistencyError, PositivityError, SpectralRoot, WaveCoeffs,
                    WellConfig)
from .secular import find_spectrum

QUAD_TOL = 1e-12
CONSISTENCY_TOL = 1e-9
P_MIN = 1e-6


@dataclass(frozen=True)
class State:
    """psi = sum of pieces, each A sin(kx) + B cos(kx) on [lo, hi]."""

    kappa: float
    pieces: tuple[Piece, ...]
    n: int = 0

    def scaled(self, factor: complex) -> "State":
        return State(self.kappa, tuple(Piece(p.lo, p.hi, p.A * factor, p.B * factor)
                                       for p in self.pieces), self.n)

    def reflected(self) -> "State":
        """x -> -x."""
        return State(self.kappa, tuple(Piece(-p.hi, -p.lo, -p.A, p.B)
                                       for p in reversed(self.pieces)), self.n)

    def __call__(self, x: float) -> complex:
        k = self.kappa
        for p in self.pieces:
            if p.lo <= x <= p.hi:
                return p.A * math.sin(k * x) + p.B * math.cos(k * x)
        raise DomainError(f"x={x} outside the support")


def eigen_state(config: WellConfig, root: SpectralRoot, coeffs: WaveCoeffs | None = None) -> State:
    k = root.kappa.real
    c = coeffs if coeffs is not None else coefficients(config, root)
    return State(k, pieces(c, k, config), root.n)


def sine_state(n: int) -> State:
    """Normalized unperturbed state sin(n pi (x+1)/2) on (-1, 1)."""
    k = n * math.pi / 2
    return State(k, (Piece(-1.0, 1.0, complex(math.cos(k)), complex(math.sin(k))),), n)


def _exp_form(p: Piece) -> tuple[complex, complex]:
    # A sin kx + B cos kx = c+ e^{ikx} + c- e^{-ikx}
    return (p.B - 1j * p.A) / 2, (p.B + 1j * p.A) / 2


def _closed(u: State, v: State) -> complex:
    total = 0j
    for pu in u.pieces:
        up, um = _exp_form(pu)
        cu = ((up.conjugate(), -u.kappa), (um.conjugate(), u.kappa))
        for pv in v.pieces:
            lo, hi = max(pu.lo, pv.lo), min(pu.hi, pv.hi)
            if hi <= lo:
                continue
            vp, vm = _exp_form(pv)
            mid, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
            for c1, w1 in cu:
                for c2, w2 in ((vp, v.kappa), (vm, -v.kappa)):
                    w = w1 + w2
                    total += c1 * c2 * np.exp(1j * w * mid) * 2 * h * np.sinc(w * h / math.pi)
    return complex(total)


def _quadrature(u: State, v: State) -> complex:
    cuts = sorted({p.lo for p in u.pieces + v.pieces} | {p.hi for p in u.pieces + v.pieces})
    re = im = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        if hi <= lo:
            continue
        f = lambda x: u(x).conjugate() * v(x)
        re += quad(lambda x: f(x).real, lo, hi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
        im += quad(lambda x: f(x).imag, lo, hi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    return complex(re, im)


def inner_product(u: State, v: State, *, check: bool = True) -> complex:
    """<u|v> from closed-form piecewise integrals, cross-checked by quadrature."""
    val = _closed(u, v)
    if check:
        ref = _quadrature(u, v)
        if abs(val - ref) > CONSISTENCY_TOL:
            raise IntegrationConsistencyError(
                f"closed form {val} and quadrature {ref} differ by {abs(val - ref):.2e}")
    return val


def parity_overlap(state: State, *, check: bool = True, tol: float = 1e-10) -> float:
    """<n|P|n>; must be real for an unbroken-phase state."""
    val = inner_product(state, state.reflected(), check=check)
    scale = max(1.0, abs(inner_product(state, state, check=False)))
    if abs(val.imag) > tol * scale:
        raise ArithmeticError(f"parity overlap {val} is not real (broken phase?)")
    return val.real


@dataclass(frozen=True)
class BiorthogonalSystem:
    config: WellConfig
    roots: tuple[SpectralRoot, ...]
    states: tuple[State, ...]               # unit-norm right states
    parity_overlaps: np.ndarray              # p_n
    q_norms: np.ndarray                      # q_n = 1/p_n
    gram: np.ndarray                         # <m|n>
    biorth: np.ndarray                       # <<m|n>
    gram_tolerance: float

    @property
    def N(self) -> int:
        return len(self.states)

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.kappa ** 2 for s in self.states])

    @property
    def left_states(self) -> tuple[State, ...]:
        return tuple(s.reflected().scaled(q) for s, q in zip(self.states, self.q_norms))

    @property
    def signs_mixed(self) -> bool:
        return len(set(np.sign(self.parity_overlaps))) > 1

    def hamiltonian_coordinates(self) -> np.ndarray:
        """Coordinate matrix of sum_n |n> E_n <<n| on the span."""
        return np.diag(self.energies) @ self.biorth


def _matrix(us: Sequence[State], vs: Sequence[State], check: bool) -> np.ndarray:
    return np.array([[inner_product(u, v, check=check) for v in vs] for u in us])


def build_biorthogonal(config: WellConfig, N: int, *, check: bool = True) -> BiorthogonalSystem:
    if N < 1:
        raise DomainError("N must be >= 1")
    roots = find_spectrum(config, N)
    for r1, r2 in zip(roots, roots[1:]):
        if r1.degenerate or abs(r2.kappa - r1.kappa) < 1e-8:
            raise DegeneracyError(f"levels {r1.n} and {r2.n} coincide at kappa={r1.kappa.real}")
    if roots[-1].degenerate:
        raise DegeneracyError(f"level {roots[-1].n} is degenerate")
    states = []
    for r in roots:
        s = eigen_state(config, r)
        states.append(s.scaled(1 / math.sqrt(inner_product(s, s, check=check).real)))
    p = np.array([parity_overlap(s, check=check) for s in states])
    small = np.flatnonzero(np.abs(p) < P_MIN)
    if small.size:
        raise ExceptionalPointError(
            f"|<n|P|n>| < {P_MIN} for n = {[int(i) + 1 for i in small]}: state nearly "
            "self-orthogonal (too close to an exceptional point)")
    q = 1 / p
    gram = _matrix(states, states, check)
    refl = [s.reflected() for s in states]
    biorth = q[:, None] * _matrix(refl, states, check)
    tol = float(np.max(np.abs(biorth - np.eye(N))))
    return BiorthogonalSystem(config, tuple(roots), tuple(states), p, q, gram, biorth, tol)


@dataclass(frozen=True)
class MetricTruncation:
    N: int
    weights: np.ndarray
    representation: np.ndarray               # form <m|eta|k> on the right-state span
    cutoff_justification: float | None = None
    basis: str = "right-eigenstates"
    smallest_eigenvalue: float = field(default=float("nan"))


def _check_weights(weights, N: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (N,):
        raise DomainError(f"need {N} weights, got shape {w.shape}")
    if not np.all(w > 0):
        raise DomainError("all metric weights must be strictly positive")
    return w


def _hermitian_positive(m: np.ndarray) -> float:
    herm = np.max(np.abs(m - m.conj().T)) / max(1.0, np.max(np.abs(m)))
    if herm > 1e-12:
        raise PositivityError(f"representation not Hermitian ({herm:.2e})", float("nan"))
    lo = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    if not lo > 0:
        raise PositivityError(f"metric not positive definite, smallest eigenvalue {lo:.3e}", lo)
    return lo


def build_metric(system: BiorthogonalSystem, weights, *,
                 cutoff_justification: float | None = None) -> MetricTruncation:
    """eta = sum_n |n>> eta_n <<n| as a form on the span of the right states."""
    w = _check_weights(weights, system.N)
    b = system.biorth
    rep = b.conj().T @ np.diag(w) @ b
    lo = _hermitian_positive(rep)
    return MetricTruncation(system.N, w, rep, cutoff_justification, smallest_eigenvalue=lo)


def quasi_hermiticity_residual(metric_form: np.ndarray, system: BiorthogonalSystem) -> float:
    """||eta H - H^dagger eta|| / (||eta|| ||H||) on the truncated span (Frobenius)."""
    eta = metric_form.representation if isinstance(metric_form, MetricTruncation) else metric_form
    c = system.hamiltonian_coordinates()
    num = np.linalg.norm(eta @ c - c.conj().T @ eta)
    return float(num / (np.linalg.norm(eta) * np.linalg.norm(c)))


def identity_resolution_residual(system: BiorthogonalSystem, *, check: bool = False) -> float:
    """max_j ||(sum |n><<n| - I) u_j|| / ||u_j|| over the projections u_j of the
    first N unperturbed states onto the span."""
    g = system.gram
    worst = 0.0
    for j in range(1, system.N + 1):
        b = np.array([inner_product(s, sine_state(j), check=check) for s in system.states])
        c = np.linalg.solve(g, b)
        d = system.biorth @ c - c
        num = math.sqrt(max(0.0, (d.conj() @ g @ d).real))
        den = math.sqrt(max(1e-300, (c.conj() @ g @ c).real))
        worst = max(worst, num / den)
    return worst


@dataclass(frozen=True)
class SeparableMetric:
    """Identity-plus-separable metric on the first K sine states."""

    N: int
    K: int
    weights: np.ndarray
    matrix: np.ndarray
    smallest_eigenvalue: float


def left_state_coordinates(system: BiorthogonalSystem, K: int) -> np.ndarray:
    """Column n holds <phi_j|n>> for j = 1..K."""
    sines = [sine_state(j) for j in range(1, K + 1)]
    return _matrix(sines, system.left_states, False)


def build_separable_metric(system: BiorthogonalSystem, weights, K: int = 128) -> SeparableMetric:
    """I - sum_{n<=N} |n,0>><<n,0| + sum_{n<=N} |n,xi>> eta_n <<n,xi| in the sine basis.

    At xi = 0 the left states are the sine states themselves (the parity
    sign and q_n cancel), so the subtracted part is a coordinate projector.
    """
    w = _check_weights(weights, system.N)
    if K < system.N:
        raise DomainError("K must be at least N")
    L = left_state_coordinates(system, K)
    m = np.eye(K, dtype=complex)
    m[np.arange(system.N), np.arange(system.N)] -= 1
    m += L @ np.diag(w) @ L.conj().T
    lo = _hermitian_positive(m)
    return SeparableMetric(system.N, K, w, m, lo)


def overlap_deficits(config: WellConfig, n_max: int, *, check: bool = False) -> np.ndarray:
    """1 - |<n,0|n,xi>| / (||n,0|| ||n,xi||) for n = 1..n_max."""
    out = []
    for r in find_spectrum(config, n_max):
        if r.degenerate:
            raise DegeneracyError(f"level {r.n} is degenerate")
        s = eigen_state(config, r)
        nrm = math.sqrt(inner_product(s, s, check=check).real)
        out.append(max(0.0, 1 - abs(inner_product(sine_state(r.n), s, check=check)) / nrm))
    return np.array(out)


def cutoff_estimate(config: WellConfig, tolerance: float, *, n_max: int = 40,
                    margin: int = 8, n_limit: int = 1024) -> int:
    """Smallest N with deficit below ``tolerance`` for every tested n > N.

    The tested window doubles until the last offending level sits at least
    ``margin`` levels below its top.
    """
    if config.xi == 0:
        return 0
    while True:
        d = overlap_deficits(config, n_max)
        bad = np.flatnonzero(d >= tolerance)
        n_cut = int(bad[-1] + 1) if bad.size else 0
        if n_cut <= n_max - margin:
            return n_cut
        if n_max >= n_limit:
            raise ConvergenceError(f"cutoff exceeds {n_limit} levels at xi={config.xi}")
        n_max *= 2


def write_complex_csv(path, matrix: np.ndarray) -> None:
    """Row-major CSV; every complex entry takes two columns, re then im."""
    m = np.asarray(matrix, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"# rows={m.shape[0]} cols={m.shape[1]} entries=re,im"])
        for row in m:
            w.writerow([f"{v:.17g}" for z in row for v in (z.real, z.imag)])


def read_complex_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    data = np.array([[float(v) for v in r] for r in rows])
    return data[:, 0::2] + 1j * data[:, 1::2]
