"""Truncated multivariate power series with exact rational coefficients.

A :class:`Ring` fixes the variable names, an integer weight per variable and
a truncation order: a term ``c * prod(v_i ** e_i)`` survives only while
``sum(w_i * e_i) <= order``.  Unit weights give the usual total-degree bound;
a zero weight makes that variable exact (never truncated), which is how the
``mu`` dependence is carried along in the ``lambda``-ordered expansions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Iterable, Mapping, Sequence

Exponent = tuple[int, ...]


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("refusing to build an exact coefficient from a float")
    return Fraction(value)


@dataclass(frozen=True)
class Ring:
    variables: tuple[str, ...]
    weights: tuple[int, ...]
    order: int

    def __post_init__(self):
        if len(self.variables) != len(self.weights):
            raise ValueError("one weight per variable")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")

    @classmethod
    def total_degree(cls, variables: Sequence[str], order: int) -> "Ring":
        return cls(tuple(variables), (1,) * len(variables), order)

    @property
    def zero_exponent(self) -> Exponent:
        return (0,) * len(self.variables)

    def degree(self, exps: Exponent) -> int:
        return sum(w * e for w, e in zip(self.weights, exps))

    def index(self, name: str) -> int:
        return self.variables.index(name)

    def const(self, value) -> "SeriesPoly":
        return SeriesPoly.from_terms(self, {self.zero_exponent: _frac(value)})

    def var(self, name: str) -> "SeriesPoly":
        exps = [0] * len(self.variables)
        exps[self.index(name)] = 1
        return SeriesPoly.from_terms(self, {tuple(exps): Fraction(1)})

    def monomial(self, coeff, **powers: int) -> "SeriesPoly":
        exps = [0] * len(self.variables)
        for name, p in powers.items():
            exps[self.index(name)] = p
        return SeriesPoly.from_terms(self, {tuple(exps): _frac(coeff)})

    def with_order(self, order: int) -> "Ring":
        return Ring(self.variables, self.weights, order)


@dataclass(frozen=True, eq=False)
class SeriesPoly:
    """Immutable truncated series; ``dropped`` counts terms discarded so far."""

    ring: Ring
    coeffs: Mapping[Exponent, Fraction]
    dropped: int = 0

    @classmethod
    def from_terms(cls, ring: Ring, terms: Mapping[Exponent, object] | Iterable,
                   dropped: int = 0) -> "SeriesPoly":
        items = terms.items() if isinstance(terms, Mapping) else terms
        kept: dict[Exponent, Fraction] = {}
        lost = 0
        for exps, c in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != len(ring.variables) or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent {exps} for ring {ring.variables}")
            c = _frac(c)
            if c == 0:
                continue
            if ring.degree(exps) > ring.order:
                lost += 1
                continue
            kept[exps] = kept.get(exps, Fraction(0)) + c
        kept = {e: c for e, c in kept.items() if c != 0}
        return cls(ring, dict(sorted(kept.items())), dropped + lost)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.ring.variables

    @property
    def order(self) -> int:
        return self.ring.order

    def __getitem__(self, exps: Exponent) -> Fraction:
        return self.coeffs.get(tuple(exps), Fraction(0))

    def coeff(self, **powers: int) -> Fraction:
        exps = [0] * len(self.ring.variables)
        for name, p in powers.items():
            exps[self.ring.index(name)] = p
        return self[tuple(exps)]

    def terms(self) -> list[tuple[Exponent, Fraction]]:
        return list(self.coeffs.items())

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, SeriesPoly):
            return self.ring == other.ring and dict(self.coeffs) == dict(other.coeffs)
        if isinstance(other, (int, Fraction)):
            return dict(self.coeffs) == ({self.ring.zero_exponent: Fraction(other)} if other else {})
        return NotImplemented

    __hash__ = None

    def _coerce(self, other) -> "SeriesPoly":
        if isinstance(other, SeriesPoly):
            if other.ring != self.ring:
                raise ValueError(f"ring mismatch: {self.ring} vs {other.ring}")
            return other
        return self.ring.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, Fraction(0)) + c
        return SeriesPoly.from_terms(self.ring, out, self.dropped + other.dropped)

    __radd__ = __add__

    def __neg__(self):
        return SeriesPoly(self.ring, {e: -c for e, c in self.coeffs.items()}, self.dropped)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, SeriesPoly):
            c = _frac(other)
            return SeriesPoly.from_terms(self.ring, {e: v * c for e, v in self.coeffs.items()},
                                         self.dropped)
        other = self._coerce(other)
        out: dict[Exponent, Fraction] = {}
        lost = 0
        order, w = self.ring.order, self.ring.weights
        for e1, c1 in self.coeffs.items():
            d1 = self.ring.degree(e1)
            for e2, c2 in other.coeffs.items():
                if d1 + sum(a * b for a, b in zip(w, e2)) > order:
                    lost += 1
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return SeriesPoly.from_terms(self.ring, out, self.dropped + other.dropped + lost)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers; use power() for rational exponents")
        result = self.ring.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other):
        if isinstance(other, SeriesPoly):
            return self * other.reciprocal()
        return self * (Fraction(1) / _frac(other))

    def __rtruediv__(self, other):
        return self.ring.const(other) * self.reciprocal()

    def valuation(self) -> int | None:
        """Smallest weighted degree present, ``None`` for the zero series."""
        if not self.coeffs:
            return None
        return min(self.ring.degree(e) for e in self.coeffs)

    @property
    def constant(self) -> Fraction:
        return self[self.ring.zero_exponent]

    def truncate(self, order: int) -> "SeriesPoly":
        return SeriesPoly.from_terms(self.ring.with_order(order), self.coeffs, self.dropped)

    def apply(self, coefficients: Callable[[int], Fraction] | Sequence) -> "SeriesPoly":
        """Compose ``f(u) = sum_k c_k u**k`` with this series as ``u``.

        Requires every term of ``u`` to have weighted degree >= 1 so that the
        composition terminates at the ring order.
        """
        val = self.valuation()
        if val is not None and val < 1:
            raise ValueError("composition needs a series with positive valuation")
        get = coefficients if callable(coefficients) else (
            lambda k: coefficients[k] if k < len(coefficients) else Fraction(0))
        result = self.ring.const(get(0))
        if val is None:
            return result
        power = self.ring.const(1)
        k = 0
        while True:
            k += 1
            power = power * self
            if not power.coeffs:
                break
            c = _frac(get(k))
            if c:
                result = result + power * c
        return result

    def reciprocal(self) -> "SeriesPoly":
        c0 = self.constant
        if c0 == 0:
            raise ZeroDivisionError("series has no invertible constant term")
        u = self * (1 / c0) - 1
        if u.valuation() is not None and u.valuation() < 1:
            raise ValueError("degree-zero part is not a pure constant; cannot invert")
        return u.apply(lambda k: Fraction((-1) ** k)) * (1 / c0)

    def power(self, exponent) -> "SeriesPoly":
        """``self ** r`` for rational ``r``; the constant term must be 1."""
        r = _frac(exponent)
        if self.constant != 1:
            raise ValueError("rational powers need a unit constant term")
        u = self - 1
        return u.apply(lambda k: binomial(r, k))

    def substitute(self, target: Ring, images: Mapping[str, "SeriesPoly"]) -> "SeriesPoly":
        """Replace variables by series over ``target``.

        Variables without an image must exist in ``target`` under the same name.
        """
        gens = []
        for name in self.ring.variables:
            if name in images:
                img = images[name]
                if img.ring != target:
                    raise ValueError(f"image of {name} lives in the wrong ring")
                gens.append(img)
            else:
                gens.append(target.var(name))
        cache: dict[tuple[int, int], SeriesPoly] = {}

        def pw(i: int, e: int) -> SeriesPoly:
            if (i, e) not in cache:
                cache[(i, e)] = target.const(1) if e == 0 else pw(i, e - 1) * gens[i]
            return cache[(i, e)]

        result = SeriesPoly.from_terms(target, {}, self.dropped)
        for exps, c in self.coeffs.items():
            term = target.const(c)
            for i, e in enumerate(exps):
                if e:
                    term = term * pw(i, e)
            result = result + term
        return result

    def map_variable(self, name: str, factor) -> "SeriesPoly":
        """Rescale one variable, ``v -> factor * v`` (exact)."""
        f = _frac(factor)
        i = self.ring.index(name)
        return SeriesPoly.from_terms(self.ring,
                                     {e: c * f ** e[i] for e, c in self.coeffs.items()},
                                     self.dropped)

    def evaluate(self, convert: Callable = float, **values):
        """Numeric value by nested Horner evaluation over the exponent lattice."""
        names = self.ring.variables
        missing = [n for n in names if n not in values]
        if missing:
            raise KeyError(f"missing values for {missing}")
        xs = [values[n] for n in names]

        def horner(items: list[tuple[Exponent, Fraction]], depth: int):
            if depth == len(names):
                return sum((convert(c) for _, c in items), convert(Fraction(0)))
            groups: dict[int, list] = {}
            for e, c in items:
                groups.setdefault(e[depth], []).append((e, c))
            acc = None
            top = max(groups) if groups else 0
            for p in range(top, -1, -1):
                inner = horner(groups[p], depth + 1) if p in groups else 0
                acc = inner if acc is None else acc * xs[depth] + inner
            return acc if acc is not None else convert(Fraction(0))

        return horner(list(self.coeffs.items()), 0)

    def to_table(self) -> str:
        """One line per term: exponents then ``numerator/denominator``."""
        lines = []
        for exps, c in self.coeffs.items():
            lines.append(" ".join(str(e) for e in exps) + f" {c.numerator}/{c.denominator}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"SeriesPoly(0; {self.ring.variables}, order={self.ring.order})"
        parts = []
        for exps, c in self.coeffs.items():
            mono = "*".join(f"{v}^{e}" if e > 1 else v
                            for v, e in zip(self.ring.variables, exps) if e)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def binomial(r: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for j in range(k):
        out *= (r - j) / (j + 1)
    return out


def sin_coefficients(k: int) -> Fraction:
    if k % 2 == 0:
        return Fraction(0)
    return Fraction((-1) ** (k // 2), factorial(k))


def cos_coefficients(k: int) -> Fraction:
    if k % 2:
        return Fraction(0)
    return Fraction((-1) ** (k // 2), factorial(k))


def arcsin_coefficients(k: int) -> Fraction:
    if k % 2 == 0:
        return Fraction(0)
    n = (k - 1) // 2
    return Fraction(factorial(2 * n), 4 ** n * factorial(n) ** 2 * (2 * n + 1))
