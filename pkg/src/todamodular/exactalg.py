"""Exact rational coefficients and sparse Laurent / exponential polynomials.

A :class:`Chart` fixes an ordered tuple of generators.  Monomials are stored as
exponent tuples aligned with that order, and a :class:`Poly` is a dict from
exponent tuple to rational coefficient with no zero entries.

Exponential generators model quantities such as ``exp((q1 - q2)/2)``: they are
formal symbols whose partial derivatives are prescribed by a linear form over
the coordinates, so ``d e / d q = c * e``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterable, Mapping, Sequence, Union

ExactScalar = Fraction
Scalar = Union[int, Fraction]


class ChartMismatchError(ValueError):
    """Operands live on different charts."""


class NotACoordinateError(ValueError):
    """Differentiation requested along a generator that is not a coordinate."""


class NonDivisibleError(ArithmeticError):
    """Exact division failed; ``remainder`` is the witness."""

    def __init__(self, message: str, remainder: "Poly"):
        super().__init__(message)
        self.remainder = remainder


def to_scalar(c) -> Scalar:
    """Coerce ``c`` to an exact scalar, keeping plain ints as ints."""
    if isinstance(c, bool):
        return int(c)
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, Rational):
        return to_scalar(Fraction(c.numerator, c.denominator))
    if isinstance(c, str):
        return to_scalar(Fraction(c))
    raise TypeError(f"not an exact scalar: {c!r}")


def format_scalar(c: Scalar) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


@dataclass(frozen=True)
class Generator:
    name: str
    kind: str = "polynomial"
    # exponential kind only: coordinate name -> c with d(gen)/d(coord) = c * gen
    derivation: tuple[tuple[str, Fraction], ...] = ()

    def __post_init__(self):
        if self.kind not in ("polynomial", "exponential"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == "polynomial" and self.derivation:
            raise ValueError("polynomial generators carry no derivation rule")


@dataclass(frozen=True)
class Chart:
    """Ordered generators plus the sublist used as tensor coordinates."""

    name: str
    generators: tuple[Generator, ...]
    coordinates: tuple[str, ...]

    def __post_init__(self):
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ValueError("generator names must be unique")
        for c in self.coordinates:
            if c not in names:
                raise ValueError(f"coordinate {c!r} is not a generator")
            if self.generators[names.index(c)].kind != "polynomial":
                raise ValueError(f"coordinate {c!r} must be a polynomial generator")
        for g in self.generators:
            for base, _ in g.derivation:
                if base not in self.coordinates:
                    raise ValueError(f"{g.name}: derivation refers to non-coordinate {base!r}")

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    @property
    def nvars(self) -> int:
        return len(self.generators)

    @cached_property
    def index(self) -> dict[str, int]:
        return {g.name: k for k, g in enumerate(self.generators)}

    @cached_property
    def coordinate_slots(self) -> tuple[int, ...]:
        return tuple(self.index[c] for c in self.coordinates)

    @cached_property
    def exp_slots(self) -> tuple[int, ...]:
        return tuple(k for k, g in enumerate(self.generators) if g.kind == "exponential")

    @cached_property
    def _exp_rules(self) -> tuple[tuple[tuple[int, Fraction], ...], ...]:
        # per coordinate position: ((generator slot, c), ...)
        rules = []
        for cname in self.coordinates:
            r = []
            for k in self.exp_slots:
                for base, c in self.generators[k].derivation:
                    if base == cname:
                        r.append((k, Fraction(c)))
            rules.append(tuple(r))
        return tuple(rules)

    def zero(self) -> "Poly":
        return Poly(self, {})

    def const(self, c) -> "Poly":
        c = to_scalar(c)
        if c == 0:
            return self.zero()
        return Poly(self, {(0,) * self.nvars: c})

    def gen(self, name: str, power: int = 1) -> "Poly":
        exps = [0] * self.nvars
        exps[self.index[name]] = power
        return Poly(self, {tuple(exps): 1})

    def coord(self, i: int) -> "Poly":
        return self.gen(self.coordinates[i])

    def monomial(self, exponents: Mapping[str, int], coeff=1) -> "Poly":
        exps = [0] * self.nvars
        for name, e in exponents.items():
            exps[self.index[name]] = e
        return Poly(self, {tuple(exps): to_scalar(coeff)}) if coeff else self.zero()

    def coordinate_position(self, name: str) -> int:
        try:
            return self.coordinates.index(name)
        except ValueError:
            raise NotACoordinateError(f"{name!r} is not a coordinate of chart {self.name}") from None

    def exp_linear_form(self, k: int) -> dict[str, Fraction]:
        return dict(self.generators[k].derivation)


def polynomial_chart(name: str, coordinates: Sequence[str]) -> Chart:
    """Chart whose generators are exactly its coordinates."""
    gens = tuple(Generator(c) for c in coordinates)
    return Chart(name, gens, tuple(coordinates))


def _grlex_key(m: tuple[int, ...]):
    return (sum(m), m)


class Poly:
    """Immutable sparse Laurent polynomial over a chart's generators."""

    __slots__ = ("chart", "terms", "_hash")

    def __init__(self, chart: Chart, terms: Mapping[tuple[int, ...], Scalar]):
        self.chart = chart
        self.terms = terms
        self._hash = None

    @classmethod
    def from_terms(cls, chart: Chart, terms: Mapping[tuple[int, ...], object]) -> "Poly":
        clean = {}
        for m, c in terms.items():
            if len(m) != chart.nvars:
                raise ValueError("exponent tuple length does not match chart")
            c = to_scalar(c)
            if c:
                clean[tuple(m)] = c
        p = cls(chart, clean)
        p._check_exp_powers()
        return p

    def _check_exp_powers(self):
        for k in self.chart.exp_slots:
            for m in self.terms:
                if m[k] < 0:
                    raise ValueError(
                        f"negative power of exponential generator {self.chart.generators[k].name}")

    # -- coercion ---------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.chart is not self.chart and other.chart != self.chart:
                raise ChartMismatchError(f"chart {self.chart.name} vs {other.chart.name}")
            return other
        return self.chart.const(other)

    # -- ring operations --------------------------------------------------
    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                del out[m]
        return Poly(self.chart, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.chart, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def scale(self, c) -> "Poly":
        c = to_scalar(c)
        if c == 0:
            return self.chart.zero()
        if c == 1:
            return self
        return Poly(self.chart, {m: v * c for m, v in self.terms.items()})

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        other = self._coerce(other)
        if len(self.terms) > len(other.terms):
            a, b = self.terms, other.terms
        else:
            a, b = other.terms, self.terms
        out: dict = {}
        get = out.get
        for m2, c2 in b.items():
            for m1, c1 in a.items():
                m = tuple([x + y for x, y in zip(m1, m2)])
                out[m] = get(m, 0) + c1 * c2
        return Poly(self.chart, {m: c for m, c in out.items() if c})

    def __rmul__(self, other) -> "Poly":
        return self.scale(other)

    def __truediv__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return exact_divide(self, other)
        return self.scale(Fraction(1) / Fraction(to_scalar(other)))

    def __pow__(self, k: int) -> "Poly":
        if not isinstance(k, int):
            raise TypeError("integer exponents only")
        if k < 0:
            if len(self.terms) != 1:
                raise ValueError("negative powers only for monomials (Laurent units)")
            (m, c), = self.terms.items()
            p = Poly.from_terms(self.chart, {tuple(-e for e in m): Fraction(1) / c})
            return p ** (-k)
        result = self.chart.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- comparison -------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.chart == other.chart and self.terms == other.terms
        try:
            return self.terms == self.chart.const(other).terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart.name, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> Scalar:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return next(iter(self.terms.values()), 0)

    # -- structure --------------------------------------------------------
    def sorted_terms(self) -> list[tuple[tuple[int, ...], Scalar]]:
        """Terms in decreasing graded-lex order over the chart's generator order."""
        return sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def leading_term(self):
        return max(self.terms.items(), key=lambda t: _grlex_key(t[0]))

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def used_generators(self) -> set[str]:
        used = set()
        for m in self.terms:
            for k, e in enumerate(m):
                if e:
                    used.add(self.chart.generators[k].name)
        return used

    def to_text(self) -> str:
        """Canonical serialization: '3/1*a1^2*b2 + -1/2*b1'."""
        if not self.terms:
            return "0/1"
        names = [g.name for g in self.chart.generators]
        parts = []
        for m, c in self.sorted_terms():
            s = format_scalar(c)
            for k, e in enumerate(m):
                if e == 1:
                    s += f"*{names[k]}"
                elif e:
                    s += f"*{names[k]}^{e}"
            parts.append(s)
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"Poly({self.to_text()})"

    __str__ = to_text

    # -- calculus ---------------------------------------------------------
    def derivative(self, x) -> "Poly":
        """Partial derivative along coordinate ``x`` (name or coordinate position)."""
        i = x if isinstance(x, int) else self.chart.coordinate_position(x)
        if not 0 <= i < self.chart.dim:
            raise NotACoordinateError(f"coordinate position {i} out of range")
        slot = self.chart.coordinate_slots[i]
        rules = self.chart._exp_rules[i]
        out: dict = {}
        for m, c in self.terms.items():
            e = m[slot]
            if e:
                mm = list(m)
                mm[slot] -= 1
                mm = tuple(mm)
                out[mm] = out.get(mm, 0) + c * e
            if rules:
                f = 0
                for k, r in rules:
                    if m[k]:
                        f += m[k] * r
                if f:
                    out[m] = out.get(m, 0) + c * f
        return Poly(self.chart, {m: to_scalar(c) for m, c in out.items() if c})

    def gradient(self) -> list["Poly"]:
        return [self.derivative(i) for i in range(self.chart.dim)]

    def evaluate(self, assignment: Mapping[str, float]) -> float:
        return evaluate(self, assignment)


def derivative(p: Poly, x) -> Poly:
    return p.derivative(x)


def poly_arith(op: str, operands: Sequence) -> Poly:
    """Fold ``op`` in {'add', 'mul', 'neg', 'scale'} over Poly / scalar operands."""
    polys = [o for o in operands if isinstance(o, Poly)]
    if not polys:
        raise TypeError("at least one Poly operand is required")
    chart = polys[0].chart
    for p in polys[1:]:
        if p.chart != chart:
            raise ChartMismatchError(f"chart {chart.name} vs {p.chart.name}")
    if op == "add":
        acc = chart.zero()
        for o in operands:
            acc = acc + o
        return acc
    if op == "mul":
        acc = chart.const(1)
        for o in operands:
            acc = acc * o
        return acc
    if op == "neg":
        (p,) = operands
        return -p
    if op == "scale":
        p, c = operands
        return p.scale(c)
    raise ValueError(f"unknown op {op!r}")


def generator_values(chart: Chart, assignment: Mapping[str, float]) -> list[float]:
    """Float value of every generator; exponential ones from their linear forms."""
    vals = [0.0] * chart.nvars
    for k, g in enumerate(chart.generators):
        if g.kind == "polynomial":
            if g.name in assignment:
                vals[k] = float(assignment[g.name])
            else:
                vals[k] = math.nan
        else:
            s = 0.0
            for base, c in g.derivation:
                s += float(c) * float(assignment[base])
            vals[k] = math.exp(s)
    return vals


def evaluate(p: Poly, assignment: Mapping[str, float]) -> float:
    """Direct term summation at a real point."""
    return evaluate_at(p, generator_values(p.chart, assignment))


def evaluate_at(p: Poly, vals: Sequence[float]) -> float:
    total = 0.0
    names = p.chart.generators
    for m, c in p.terms.items():
        t = float(c)
        for k, e in enumerate(m):
            if e:
                v = vals[k]
                if math.isnan(v):
                    raise KeyError(f"no value assigned to {names[k].name}")
                if e < 0 and v == 0.0:
                    raise ZeroDivisionError(f"{names[k].name} = 0 appears with exponent {e}")
                t *= v ** e
        total += t
    return total


def _content(p: Poly) -> tuple[int, ...]:
    """Componentwise minimum exponent (the largest monomial factor)."""
    it = iter(p.terms)
    low = list(next(it))
    for m in it:
        for k, e in enumerate(m):
            if e < low[k]:
                low[k] = e
    return tuple(low)


def _shift(p: Poly, by: tuple[int, ...], sign: int = -1) -> Poly:
    return Poly(p.chart, {tuple(e + sign * s for e, s in zip(m, by)): c for m, c in p.terms.items()})


def exact_divide(p: Poly, q: Poly) -> Poly:
    """Return r with p == q * r in the Laurent ring, else raise NonDivisibleError."""
    q = p._coerce(q)
    if q.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if p.is_zero():
        return p
    if len(q.terms) == 1:
        return _checked(p, q, p * _monomial_inverse(q))
    cq = _content(q)
    cp = _content(p)
    q0 = _shift(q, cq)
    cur = _shift(p, cp)
    ltm, ltc = q0.leading_term()
    quot: dict = {}
    rem: dict = {}
    while cur.terms:
        m, c = cur.leading_term()
        if all(a >= b for a, b in zip(m, ltm)):  # lt(q0) divides m
            tm = tuple(a - b for a, b in zip(m, ltm))
            tc = Fraction(c) / ltc
            quot[tm] = to_scalar(tc)
            cur = cur - Poly(q.chart, {tm: to_scalar(tc)}) * q0
        else:
            rem[m] = c
            cur = cur - Poly(q.chart, {m: c})
    if rem:
        raise NonDivisibleError("polynomial is not divisible",
                                _shift(Poly(q.chart, rem), cp, sign=1))
    r = _shift(Poly(q.chart, quot), tuple(a - b for a, b in zip(cp, cq)), sign=1)
    return _checked(p, q, r)


def _monomial_inverse(q: Poly) -> Poly:
    (m, c), = q.terms.items()
    return Poly(q.chart, {tuple(-e for e in m): to_scalar(Fraction(1) / c)})


def _checked(p: Poly, q: Poly, r: Poly) -> Poly:
    """Reject quotients with poles the dividend does not already have.

    Dividing by a monomial always succeeds in the Laurent ring, which would make
    every division by ``b_1`` legal; requiring each exponent of ``r`` to stay at
    or above ``min(0, lowest exponent in p)`` keeps the polynomial notion.
    """
    floor = tuple(min(0, e) for e in _content(p))
    bad = {m: c for m, c in r.terms.items() if any(e < f for e, f in zip(m, floor))}
    if bad:
        good = Poly(r.chart, {m: c for m, c in r.terms.items() if m not in bad})
        raise NonDivisibleError("polynomial is not divisible", p - q * good)
    return r


def determinant(M: Sequence[Sequence[Poly]]) -> Poly:
    """Exact determinant: cofactor expansion below size 5, Bareiss otherwise."""
    n = len(M)
    if any(len(row) != n for row in M):
        raise ValueError("determinant needs a square matrix")
    if n == 0:
        raise ValueError("empty matrix")
    if n < 5:
        return _cofactor(list(map(list, M)))
    return _bareiss([list(row) for row in M])


def _cofactor(M: list[list[Poly]]) -> Poly:
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = M[0][0].chart.zero()
    for j in range(n):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _cofactor(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _bareiss(M: list[list[Poly]]) -> Poly:
    n = len(M)
    chart = M[0][0].chart
    sign = 1
    prev = chart.const(1)
    for k in range(n - 1):
        if M[k][k].is_zero():
            for i in range(k + 1, n):
                if not M[i][k].is_zero():
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return chart.zero()
        piv = M[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = M[i][j] * piv - M[i][k] * M[k][j]
                M[i][j] = exact_divide(num, prev) if not prev == 1 else num
            M[i][k] = chart.zero()
        prev = piv
    d = M[n - 1][n - 1]
    return d if sign == 1 else -d
