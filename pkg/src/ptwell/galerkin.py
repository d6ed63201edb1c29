"""Sine-basis Galerkin oracle for the spectrum.

Never touches the secular function: the Hamiltonian is assembled in the
unperturbed basis ``phi_n(x) = sin(n pi (x+1)/2)`` and diagonalized densely.
Point interactions make the error first order in 1/M, so results are
usually combined by Richardson extrapolation over (M, 2M).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import DomainError, WellConfig


class MatchCollisionError(RuntimeError):
    """Two reference levels were assigned the same oracle eigenvalue."""


def basis_values(M: int, x: float) -> np.ndarray:
    n = np.arange(1, M + 1)
    return np.sin(n * math.pi * (x + 1) / 2)


def build_hamiltonian_matrix(config: WellConfig, M: int) -> np.ndarray:
    if M < 1:
        raise DomainError("M must be >= 1")
    n = np.arange(1, M + 1)
    u = basis_values(M, config.a)
    v = basis_values(M, -config.a)
    h = 1j * config.xi * (np.outer(u, u) - np.outer(v, v))
    h[n - 1, n - 1] += (n * math.pi / 2) ** 2
    return h


@dataclass(frozen=True)
class OracleSpectrum:
    M: int
    eigenvalues: np.ndarray      # sorted by (real, imag)
    config: WellConfig
    scale: float                 # ||H||_2 estimate used for relative tolerances

    def lowest(self, k: int) -> np.ndarray:
        return self.eigenvalues[:k]

    def conjugate_asymmetry(self) -> float:
        """max over eigenvalues of the distance from its conjugate to the spectrum."""
        e = self.eigenvalues
        d = np.abs(np.conj(e)[:, None] - e[None, :]).min(axis=1)
        return float(d.max())

    def complex_pairs(self, k: int, rel_tol: float = 1e-8) -> list[complex]:
        """Upper members of complex pairs among the lowest ``k`` eigenvalues."""
        low = self.eigenvalues[:k]
        return [complex(z) for z in low if z.imag > rel_tol * self.scale]


def oracle_spectrum(config: WellConfig, M: int) -> OracleSpectrum:
    h = build_hamiltonian_matrix(config, M)
    ev = scipy.linalg.eigvals(h, overwrite_a=True, check_finite=False)
    scale = (M * math.pi / 2) ** 2 + 2 * config.xi * M
    # Snap round-off imaginary parts of real eigenvalues.
    ev = np.where(np.abs(ev.imag) <= 1e-10 * scale, ev.real + 0j, ev)
    ev = ev[np.lexsort((ev.imag, ev.real))]
    # Conjugate partners differ in the last bits of the real part; order them
    # lower half-plane first.
    for i in range(len(ev) - 1):
        if ev[i].imag > 0 and abs(ev[i + 1] - ev[i].conjugate()) <= 1e-8 * scale:
            ev[i], ev[i + 1] = ev[i + 1], ev[i]
    return OracleSpectrum(M, ev, config, scale)


def richardson(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    """First-order extrapolation from results at M and 2M."""
    return 2 * np.asarray(fine) - np.asarray(coarse)


def match_levels(reference, oracle) -> np.ndarray:
    """Index into ``oracle`` for each reference value, by nearest real part.

    Entries tied on the real part (conjugate partners) are separated by the
    imaginary part.  Raises :class:`MatchCollisionError` if two references
    pick the same entry.
    """
    orc = np.asarray(oracle)
    idx = []
    for r in np.asarray(reference):
        dre = np.abs(orc.real - r.real)
        near = np.flatnonzero(dre <= dre.min() + 1e-9 * max(1.0, abs(r)))
        idx.append(int(near[np.argmin(np.abs(orc.imag[near] - r.imag))]))
    if len(set(idx)) != len(idx):
        raise MatchCollisionError(f"ambiguous oracle assignment {idx}")
    return np.array(idx)


@dataclass(frozen=True)
class ExtrapolatedSpectrum:
    config: WellConfig
    M: int
    raw_coarse: np.ndarray
    raw_fine: np.ndarray
    extrapolated: np.ndarray


def extrapolated_levels(config: WellConfig, M: int, k: int) -> ExtrapolatedSpectrum:
    """Lowest ``k`` eigenvalues at M and 2M and their Richardson combination.

    The coarse list is matched onto the fine one so that both entries of a
    pair refer to the same level.
    """
    fine = oracle_spectrum(config, 2 * M).lowest(k)
    coarse_all = oracle_spectrum(config, M).lowest(k + 4)
    coarse = coarse_all[match_levels(fine, coarse_all)]
    return ExtrapolatedSpectrum(config, M, coarse, fine, richardson(coarse, fine))


def convergence_orders(errors) -> np.ndarray:
    """log2 of successive error ratios for a doubling sequence of M."""
    e = np.abs(np.asarray(errors, dtype=float))
    return np.log2(e[:-1] / e[1:])


def _sweep_worker(args):
    a, xi, M, k = args
    return oracle_spectrum(WellConfig(a, xi), M).lowest(k)


def oracle_sweep(configs, M: int, k: int, *, workers: int = 1) -> list[np.ndarray]:
    jobs = [(c.a, c.xi, M, k) for c in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_worker, jobs))
    return [_sweep_worker(j) for j in jobs]
