"""Domain types for the two-delta PT-symmetric square well.

The Hamiltonian is ``-d^2/dx^2 - i xi delta(x + a) + i xi delta(x - a)`` on
``(-1, 1)`` with Dirichlet walls.  Every other module works with the value
objects defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Parameter outside the model's domain."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap."""


class MergerError(RuntimeError):
    """Fewer real roots than requested: some levels have complexified."""

    def __init__(self, message: str, *, found: int = 0, requested: int = 0,
                 merger_kappas: tuple[float, ...] = ()):
        super().__init__(message)
        self.found = found
        self.requested = requested
        self.merger_kappas = merger_kappas


class ExceptionalPointError(RuntimeError):
    """Operation undefined at a double root (Jordan block)."""


class DegenerateFormulaError(ArithmeticError):
    """A closed-form coefficient formula has a vanishing denominator."""


class DegeneracyError(RuntimeError):
    """Two levels coincide where a non-degenerate spectrum is required."""


class IntegrationConsistencyError(RuntimeError):
    """Closed-form and quadrature overlaps disagree."""


class PositivityError(RuntimeError):
    """A metric representation failed to be positive definite."""

    def __init__(self, message: str, smallest_eigenvalue: float):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class ContinuationError(RuntimeError):
    """Step halving exhausted while continuing a root."""


@dataclass(frozen=True)
class WellConfig:
    """Displacement ``a`` of the interaction points and coupling size ``xi``."""

    a: float
    xi: float

    def __post_init__(self):
        a, xi = float(self.a), float(self.xi)
        if not (math.isfinite(a) and 0.0 < a < 1.0):
            raise DomainError(f"displacement a must lie in (0, 1), got {self.a!r}")
        if not (math.isfinite(xi) and xi >= 0.0):
            raise DomainError(f"coupling xi must be finite and >= 0, got {self.xi!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "xi", xi)

    @property
    def mu(self) -> float:
        return self.xi / 2.0


def make_config(a, xi) -> WellConfig:
    """Validated :class:`WellConfig`; accepts numbers or decimal strings."""
    try:
        a_val, xi_val = float(a), float(xi)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"non-numeric parameter: a={a!r}, xi={xi!r}") from exc
    return WellConfig(a_val, xi_val)


REAL = "real"
COMPLEX_PAIR = "complex-pair"


@dataclass(frozen=True)
class SpectralRoot:
    """Level ``n`` (1-based) with momentum ``kappa`` and energy ``kappa**2``.

    ``degenerate`` marks a real double root of the secular function (a level
    crossing or the exceptional point itself); both members are returned.
    """

    n: int
    kappa: complex
    regime: str = REAL
    degenerate: bool = False

    def __post_init__(self):
        if self.regime not in (REAL, COMPLEX_PAIR):
            raise ValueError(f"unknown regime {self.regime!r}")
        k = complex(self.kappa)
        if self.regime == REAL:
            if k.imag != 0.0 or k.real <= 0.0:
                raise ValueError(f"real-regime root must be a positive real, got {k}")
        object.__setattr__(self, "kappa", k)

    @property
    def energy(self) -> complex:
        return self.kappa * self.kappa

    @property
    def is_real(self) -> bool:
        return self.regime == REAL

    def conjugate(self, n: int | None = None) -> "SpectralRoot":
        return SpectralRoot(self.n if n is None else n, self.kappa.conjugate(),
                            self.regime, self.degenerate)


@dataclass(frozen=True)
class WaveCoeffs:
    """Real amplitudes of the piecewise ansatz.

    psi_L = (alpha - i beta) sin k(x+1),  psi_C = gamma cos kx + i delta sin kx,
    psi_R = (alpha + i beta) sin k(1-x).
    ``norm_convention`` names the amplitude fixed to 1 (e.g. ``"alpha=1"``);
    ``route`` records which formula set produced the vector.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    norm_convention: str
    route: str = "closed"

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    def scaled(self, factor: float, norm_convention: str | None = None) -> "WaveCoeffs":
        return WaveCoeffs(self.alpha * factor, self.beta * factor, self.gamma * factor,
                          self.delta * factor, norm_convention or self.norm_convention,
                          self.route)
