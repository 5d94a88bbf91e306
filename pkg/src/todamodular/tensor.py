"""Coordinate tensor calculus with polynomial components.

Conventions, fixed once for the whole package:

* ``B[i][j] = {x_i, x_j}`` and ``{f, g} = grad(f)^T B grad(g)``;
* the Hamiltonian vector field of ``f`` is ``B @ grad(f)``, so
  ``X_f(g) = {g, f}``;
* ``(L_X B)^{ij} = X^l d_l B^{ij} - B^{lj} d_l X^i - B^{il} d_l X^j``;
* ``[P, Q]^{ijk}`` is the cyclic sum of ``P^{li} d_l Q^{jk} + Q^{li} d_l P^{jk}``,
  which equals twice the Jacobiator when ``P == Q``;
* divergence and modular fields use the Euclidean volume of the chart unless
  a Laurent-monomial density is supplied.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .exactalg import Chart, ChartMismatchError, Poly, evaluate_at, exact_divide, generator_values


def _same_chart(*charts: Chart) -> Chart:
    first = charts[0]
    for c in charts[1:]:
        if c is not first and c != first:
            raise ChartMismatchError(f"chart {first.name} vs {c.name}")
    return first


class PolyVectorField:
    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: Sequence[Poly]):
        if len(components) != chart.dim:
            raise ValueError(f"expected {chart.dim} components, got {len(components)}")
        self.chart = chart
        self.components = tuple(c if isinstance(c, Poly) else chart.const(c) for c in components)

    @classmethod
    def zero(cls, chart: Chart) -> "PolyVectorField":
        return cls(chart, [chart.zero()] * chart.dim)

    def __getitem__(self, i: int) -> Poly:
        return self.components[i]

    def __iter__(self) -> Iterator[Poly]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        _same_chart(self.chart, other.chart)
        return PolyVectorField(self.chart, [a + b for a, b in zip(self, other)])

    def __sub__(self, other: "PolyVectorField") -> "PolyVectorField":
        _same_chart(self.chart, other.chart)
        return PolyVectorField(self.chart, [a - b for a, b in zip(self, other)])

    def __neg__(self) -> "PolyVectorField":
        return PolyVectorField(self.chart, [-a for a in self])

    def __mul__(self, c) -> "PolyVectorField":
        """Multiply every component by a scalar or a Poly."""
        if isinstance(c, Poly):
            return PolyVectorField(self.chart, [a * c for a in self])
        return PolyVectorField(self.chart, [a.scale(c) for a in self])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        return self.chart == other.chart and self.components == other.components

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __call__(self, h: Poly) -> Poly:
        return apply_vf(self, h)

    def evaluate(self, assignment) -> list[float]:
        vals = generator_values(self.chart, assignment)
        return [evaluate_at(c, vals) for c in self.components]

    def __repr__(self) -> str:
        return "PolyVectorField(" + ", ".join(
            f"{n}: {c}" for n, c in zip(self.chart.coordinates, self.components) if c) + ")"


class PolyBivector:
    """Antisymmetric 2-tensor stored by its strictly upper entries."""

    __slots__ = ("chart", "upper")

    def __init__(self, chart: Chart, upper: dict[tuple[int, int], Poly] | None = None):
        self.chart = chart
        clean = {}
        for (i, j), v in (upper or {}).items():
            if not isinstance(v, Poly):
                v = chart.const(v)
            if i == j:
                if not v.is_zero():
                    raise ValueError("diagonal entries of a bivector must vanish")
                continue
            if i > j:
                i, j, v = j, i, -v
            if not v.is_zero():
                clean[(i, j)] = v
        self.upper = clean

    @classmethod
    def from_matrix(cls, chart: Chart, M) -> "PolyBivector":
        rows = M.rows if isinstance(M, PolyMatrix) else M
        n = chart.dim
        upper = {}
        for i in range(n):
            if not rows[i][i].is_zero():
                raise ValueError("matrix is not antisymmetric (nonzero diagonal)")
            for j in range(i + 1, n):
                if not (rows[i][j] + rows[j][i]).is_zero():
                    raise ValueError(f"matrix is not antisymmetric at ({i}, {j})")
                upper[(i, j)] = rows[i][j]
        return cls(chart, upper)

    @classmethod
    def from_names(cls, chart: Chart, entries: dict[tuple[str, str], Poly]) -> "PolyBivector":
        pos = {c: k for k, c in enumerate(chart.coordinates)}
        return cls(chart, {(pos[a], pos[b]): v for (a, b), v in entries.items()})

    def entry(self, i: int, j: int) -> Poly:
        if i < j:
            return self.upper.get((i, j)) or self.chart.zero()
        if i > j:
            v = self.upper.get((j, i))
            return -v if v is not None else self.chart.zero()
        return self.chart.zero()

    def __getitem__(self, ij: tuple[int, int]) -> Poly:
        return self.entry(*ij)

    def to_matrix(self) -> "PolyMatrix":
        n = self.chart.dim
        return PolyMatrix([[self.entry(i, j) for j in range(n)] for i in range(n)])

    def _combine(self, other: "PolyBivector", sign: int) -> "PolyBivector":
        _same_chart(self.chart, other.chart)
        out = dict(self.upper)
        for k, v in other.upper.items():
            v = v if sign > 0 else -v
            out[k] = out[k] + v if k in out else v
        return PolyBivector(self.chart, out)

    def __add__(self, other: "PolyBivector") -> "PolyBivector":
        return self._combine(other, 1)

    def __sub__(self, other: "PolyBivector") -> "PolyBivector":
        return self._combine(other, -1)

    def __neg__(self) -> "PolyBivector":
        return PolyBivector(self.chart, {k: -v for k, v in self.upper.items()})

    def __mul__(self, c) -> "PolyBivector":
        if isinstance(c, Poly):
            return PolyBivector(self.chart, {k: v * c for k, v in self.upper.items()})
        return PolyBivector(self.chart, {k: v.scale(c) for k, v in self.upper.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyBivector):
            return NotImplemented
        return self.chart == other.chart and self.upper == other.upper

    def is_zero(self) -> bool:
        return not self.upper

    def nonzero_count(self) -> int:
        return len(self.upper)

    def evaluate(self, assignment):
        """Dense float matrix at a point (numpy array)."""
        import numpy as np

        vals = generator_values(self.chart, assignment)
        n = self.chart.dim
        out = np.zeros((n, n))
        for (i, j), v in self.upper.items():
            x = evaluate_at(v, vals)
            out[i, j] = x
            out[j, i] = -x
        return out

    def __repr__(self) -> str:
        names = self.chart.coordinates
        return "PolyBivector(" + ", ".join(
            f"{{{names[i]},{names[j]}}}={v}" for (i, j), v in sorted(self.upper.items())) + ")"


def _perm_sign(idx: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    lst = list(idx)
    sign = 1
    for a in range(len(lst)):
        for b in range(len(lst) - 1 - a):
            if lst[b] > lst[b + 1]:
                lst[b], lst[b + 1] = lst[b + 1], lst[b]
                sign = -sign
    return sign, tuple(lst)


class PolyTrivector:
    """Totally antisymmetric 3-tensor stored on strictly increasing triples."""

    __slots__ = ("chart", "entries")

    def __init__(self, chart: Chart, entries: dict[tuple[int, int, int], Poly] | None = None):
        self.chart = chart
        clean = {}
        for idx, v in (entries or {}).items():
            if len(set(idx)) < 3:
                continue
            s, key = _perm_sign(idx)
            v = v if s > 0 else -v
            clean[key] = clean[key] + v if key in clean else v
        self.entries = {k: v for k, v in clean.items() if not v.is_zero()}

    def entry(self, i: int, j: int, k: int) -> Poly:
        if len({i, j, k}) < 3:
            return self.chart.zero()
        s, key = _perm_sign((i, j, k))
        v = self.entries.get(key)
        if v is None:
            return self.chart.zero()
        return v if s > 0 else -v

    def __getitem__(self, ijk) -> Poly:
        return self.entry(*ijk)

    def __sub__(self, other: "PolyTrivector") -> "PolyTrivector":
        _same_chart(self.chart, other.chart)
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out[k] - v if k in out else -v
        return PolyTrivector(self.chart, out)

    def __mul__(self, c) -> "PolyTrivector":
        return PolyTrivector(self.chart, {k: v.scale(c) for k, v in self.entries.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyTrivector):
            return NotImplemented
        return self.chart == other.chart and self.entries == other.entries

    def is_zero(self) -> bool:
        return not self.entries

    def __repr__(self) -> str:
        names = self.chart.coordinates
        return "PolyTrivector(" + ", ".join(
            f"[{names[i]},{names[j]},{names[k]}]={v}" for (i, j, k), v in sorted(self.entries.items())) + ")"


class PolyMatrix:
    """Dense square or rectangular grid of Poly."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence[Poly]]):
        self.rows = [list(r) for r in rows]
        width = {len(r) for r in self.rows}
        if len(width) > 1:
            raise ValueError("ragged matrix")

    @classmethod
    def identity(cls, chart: Chart, n: int | None = None) -> "PolyMatrix":
        n = chart.dim if n is None else n
        one, zero = chart.const(1), chart.zero()
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0]) if self.rows else 0

    @property
    def chart(self) -> Chart:
        return self.rows[0][0].chart

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other):
        if isinstance(other, PolyVectorField):
            return self.apply(other)
        if isinstance(other, PolyBivector):
            other = other.to_matrix()
        n, m = self.shape
        m2, k = other.shape
        if m != m2:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        zero = self.chart.zero()
        out = []
        for i in range(n):
            row = self.rows[i]
            nz = [(l, row[l]) for l in range(m) if not row[l].is_zero()]
            new = []
            for j in range(k):
                acc = zero
                for l, a in nz:
                    b = other.rows[l][j]
                    if not b.is_zero():
                        acc = acc + a * b
                new.append(acc)
            out.append(new)
        return PolyMatrix(out)

    def apply(self, X) -> PolyVectorField | list[Poly]:
        comps = list(X.components) if isinstance(X, PolyVectorField) else list(X)
        n, m = self.shape
        if m != len(comps):
            raise ValueError(f"shape mismatch {self.shape} applied to length {len(comps)}")
        zero = comps[0].chart.zero()
        out = []
        for i in range(n):
            acc = zero
            for a, b in zip(self.rows[i], comps):
                if not a.is_zero() and not b.is_zero():
                    acc = acc + a * b
            out.append(acc)
        if isinstance(X, PolyVectorField) and n == X.chart.dim:
            return PolyVectorField(X.chart, out)
        return out

    def power(self, k: int) -> "PolyMatrix":
        n, m = self.shape
        if n != m:
            raise ValueError("power of a non-square matrix")
        if k < 0:
            raise ValueError("negative matrix power")
        result = PolyMatrix.identity(self.chart, n)
        for _ in range(k):
            result = result @ self
        return result

    def transpose(self) -> "PolyMatrix":
        n, m = self.shape
        return PolyMatrix([[self.rows[i][j] for i in range(n)] for j in range(m)])

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __mul__(self, c) -> "PolyMatrix":
        return PolyMatrix([[a * c if isinstance(c, Poly) else a.scale(c) for a in r] for r in self.rows])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.rows == other.rows

    def trace(self) -> Poly:
        acc = self.rows[0][0].chart.zero()
        for i in range(len(self.rows)):
            acc = acc + self.rows[i][i]
        return acc

    def is_zero(self) -> bool:
        return all(a.is_zero() for r in self.rows for a in r)


def matrix_ops(op: str, *args):
    """Dispatch for {'mul', 'apply_to_vf', 'power', 'transpose'}."""
    if op == "mul":
        a, b = args
        return a @ b
    if op == "apply_to_vf":
        M, X = args
        return M.apply(X)
    if op == "power":
        M, k = args
        return M.power(k)
    if op == "transpose":
        (M,) = args
        return M.transpose()
    raise ValueError(f"unknown matrix op {op!r}")


# -- scalar / vector operations ------------------------------------------

def gradient(f: Poly) -> list[Poly]:
    return f.gradient()


def apply_vf(X: PolyVectorField, h: Poly) -> Poly:
    """X(h) = sum_i X^i dh/dx_i."""
    _same_chart(X.chart, h.chart)
    acc = h.chart.zero()
    for i, c in enumerate(X.components):
        if not c.is_zero():
            d = h.derivative(i)
            if not d.is_zero():
                acc = acc + c * d
    return acc


def poisson_bracket(B: PolyBivector, f: Poly, g: Poly) -> Poly:
    """{f, g} = grad(f)^T B grad(g)."""
    _same_chart(B.chart, f.chart, g.chart)
    df, dg = f.gradient(), g.gradient()
    acc = f.chart.zero()
    for (i, j), v in B.upper.items():
        t = df[i] * dg[j] - df[j] * dg[i]
        if not t.is_zero():
            acc = acc + v * t
    return acc


def hamiltonian_vf(B: PolyBivector, grad: Sequence[Poly]) -> PolyVectorField:
    """B @ grad; pass grad(f) explicitly so Laurent log-gradients are allowed."""
    n = B.chart.dim
    if len(grad) != n:
        raise ValueError(f"gradient has length {len(grad)}, chart dimension is {n}")
    _same_chart(B.chart, *[g.chart for g in grad])
    out = [B.chart.zero() for _ in range(n)]
    for (i, j), v in B.upper.items():
        if not grad[j].is_zero():
            out[i] = out[i] + v * grad[j]
        if not grad[i].is_zero():
            out[j] = out[j] - v * grad[i]
    return PolyVectorField(B.chart, out)


def lie_bracket(X: PolyVectorField, Y: PolyVectorField) -> PolyVectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    _same_chart(X.chart, Y.chart)
    return PolyVectorField(X.chart, [apply_vf(X, yi) - apply_vf(Y, xi) for xi, yi in zip(X, Y)])


def _jacobian(X: PolyVectorField) -> list[list[Poly]]:
    # J[i][l] = d X^i / d x_l
    return [c.gradient() for c in X.components]


def lie_derivative_bivector(X: PolyVectorField, B: PolyBivector) -> PolyBivector:
    _same_chart(X.chart, B.chart)
    n = X.chart.dim
    dX = _jacobian(X)
    # rows[i] as sparse {l: B^{il}}
    rows: list[dict[int, Poly]] = [dict() for _ in range(n)]
    for (i, j), v in B.upper.items():
        rows[i][j] = v
        rows[j][i] = -v
    out = {}
    zero = X.chart.zero()
    for i in range(n):
        for j in range(i + 1, n):
            acc = apply_vf(X, B.upper[(i, j)]) if (i, j) in B.upper else zero
            # - B^{lj} d_l X^i
            for l, bjl in rows[j].items():
                d = dX[i][l]
                if not d.is_zero():
                    acc = acc + bjl * d
            # - B^{il} d_l X^j
            for l, bil in rows[i].items():
                d = dX[j][l]
                if not d.is_zero():
                    acc = acc - bil * d
            if not acc.is_zero():
                out[(i, j)] = acc
    return PolyBivector(X.chart, out)


def schouten_bb(P: PolyBivector, Q: PolyBivector) -> PolyTrivector:
    """Schouten bracket of two bivectors as a trivector (see module conventions)."""
    chart = _same_chart(P.chart, Q.chart)
    n = chart.dim
    dP = {k: v.gradient() for k, v in P.upper.items()}
    dQ = {k: v.gradient() for k, v in Q.upper.items()}
    colP: list[dict[int, Poly]] = [dict() for _ in range(n)]  # colP[i][l] = P^{li}
    colQ: list[dict[int, Poly]] = [dict() for _ in range(n)]
    for (l, i), v in P.upper.items():
        colP[i][l] = v
        colP[l][i] = -v
    for (l, i), v in Q.upper.items():
        colQ[i][l] = v
        colQ[l][i] = -v
    zero = chart.zero()

    def d_entry(table, j, k, l):
        if j < k:
            g = table.get((j, k))
            return g[l] if g is not None else zero
        g = table.get((k, j))
        return -g[l] if g is not None else zero

    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                acc = zero
                for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                    for l, pla in colP[a].items():
                        d = d_entry(dQ, b, c, l)
                        if not d.is_zero():
                            acc = acc + pla * d
                    for l, qla in colQ[a].items():
                        d = d_entry(dP, b, c, l)
                        if not d.is_zero():
                            acc = acc + qla * d
                if not acc.is_zero():
                    out[(i, j, k)] = acc
    return PolyTrivector(chart, out)


def jacobiator(B: PolyBivector) -> PolyTrivector:
    """Cyclic sum {{x_i,x_j},x_k} + ... computed through poisson_bracket alone."""
    chart = B.chart
    n = chart.dim
    xs = [chart.coord(i) for i in range(n)]
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                acc = (poisson_bracket(B, B.entry(i, j), xs[k])
                       + poisson_bracket(B, B.entry(j, k), xs[i])
                       + poisson_bracket(B, B.entry(k, i), xs[j]))
                out[(i, j, k)] = acc
    return PolyTrivector(chart, out)


def divergence(X: PolyVectorField) -> Poly:
    acc = X.chart.zero()
    for i, c in enumerate(X.components):
        acc = acc + c.derivative(i)
    return acc


def modular_vf(B: PolyBivector, density: Poly | None = None) -> PolyVectorField:
    """Component j is sum_i d B^{ji} / d x_i, w.r.t. the volume density * dx.

    With a density ``a`` the component is ``a^{-1} sum_i d(a B^{ji})/dx_i``;
    the division must be exact (``a`` a Laurent monomial always works).
    """
    n = B.chart.dim
    comps = []
    for j in range(n):
        acc = B.chart.zero()
        for i in range(n):
            v = B.entry(j, i)
            if v.is_zero():
                continue
            acc = acc + (v if density is None else density * v).derivative(i)
        if density is not None:
            acc = acc * density ** -1 if len(density.terms) == 1 else exact_divide(acc, density)
        comps.append(acc)
    return PolyVectorField(B.chart, comps)


def bivector_function_bracket(B: PolyBivector, h: Poly) -> PolyVectorField:
    """[B, h] := -B @ grad(h), the sign for which D[B,X] = [D(B),X] - [B,D(X)] holds."""
    return -hamiltonian_vf(B, h.gradient())
