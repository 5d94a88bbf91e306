"""The Toda hierarchy in canonical coordinates (q_1..q_N, p_1..p_N).

The chart carries formal exponential generators e_i = exp((q_i - q_{i+1})/2),
so the potential exp(q_i - q_{i+1}) is e_i^2 and the Flaschka map reads
a_i = e_i / 2, b_i = -p_i / 2.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .exactalg import Chart, Generator, Poly, determinant, exact_divide
from .flaschka import FlaschkaSystem, _check_n, flaschka_chart
from .reports import IdentityReport, run_exact
from .tensor import (
    PolyBivector,
    PolyMatrix,
    PolyVectorField,
    apply_vf,
    divergence,
    hamiltonian_vf,
    lie_bracket,
    lie_derivative_bivector,
    modular_vf,
    schouten_bb,
)

CHART = "natural"
HALF = Fraction(1, 2)


class NotProjectableError(ValueError):
    """A natural-chart expression still depends on bare q after rewriting."""

    def __init__(self, message: str, witness: str):
        super().__init__(f"{message}: {witness}")
        self.witness = witness


@lru_cache(maxsize=None)
def natural_chart(N: int) -> Chart:
    _check_n(N)
    qs = [f"q{i}" for i in range(1, N + 1)]
    ps = [f"p{i}" for i in range(1, N + 1)]
    gens = [Generator(x) for x in qs + ps]
    for i in range(1, N):
        rule = ((f"q{i}", HALF), (f"q{i + 1}", -HALF))
        gens.append(Generator(f"e{i}", "exponential", rule))
    return Chart(f"natural[N={N}]", tuple(gens), tuple(qs + ps))


class NaturalSystem:
    def __init__(self, N: int):
        _check_n(N)
        self.N = N
        self.chart = natural_chart(N)
        self._J: dict[int, PolyBivector] = {}
        self._Rpow: list[PolyMatrix] = []
        self._Z: dict[int, PolyVectorField] = {}
        self._h: dict[int, Poly] = {}
        self._Y: dict[int, PolyVectorField] = {}
        self._detR: Poly | None = None
        self._flaschka: FlaschkaSystem | None = None
        self._push: "PushforwardMap | None" = None

    # -- symbols ----------------------------------------------------------
    def q(self, i: int) -> Poly:
        return self.chart.gen(f"q{i}")

    def p(self, i: int) -> Poly:
        return self.chart.gen(f"p{i}")

    def e(self, i: int) -> Poly:
        return self.chart.gen(f"e{i}") if 1 <= i <= self.N - 1 else self.chart.zero()

    def iq(self, i: int) -> int:
        return i - 1

    def ip(self, i: int) -> int:
        return self.N + i - 1

    @property
    def flaschka(self) -> FlaschkaSystem:
        if self._flaschka is None:
            self._flaschka = FlaschkaSystem(self.N)
        return self._flaschka

    # -- Poisson pair and recursion operator ------------------------------
    def J1_hat(self) -> PolyBivector:
        return PolyBivector(self.chart, {(self.iq(i), self.ip(i)): 1 for i in range(1, self.N + 1)})

    def J2_hat(self) -> PolyBivector:
        N = self.N
        up = {}
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1):
                up[(self.iq(i), self.iq(j))] = self.chart.const(1)
            up[(self.iq(i), self.ip(i))] = -self.p(i)
        for i in range(1, N):
            up[(self.ip(i), self.ip(i + 1))] = self.e(i) ** 2
        return PolyBivector(self.chart, up)

    def build_J(self, j: int) -> PolyBivector:
        if j < 1:
            raise ValueError("Poisson tensors are indexed from 1")
        if j not in self._J:
            if j == 1:
                self._J[1] = self.J1_hat() * 4
            elif j == 2:
                self._J[2] = self.J2_hat() * 2
            else:
                M = self.R_power(j - 2) @ self.build_J(2).to_matrix()
                self._J[j] = PolyBivector.from_matrix(self.chart, M)
        return self._J[j]

    J = build_J

    def J1_inverse(self) -> PolyMatrix:
        # J_1 = 4 S with S^2 = -1, hence J_1^{-1} = J_1^T / 16
        return self.build_J(1).to_matrix().transpose() * Fraction(1, 16)

    def recursion_operator(self) -> PolyMatrix:
        if not self._Rpow:
            R = self.build_J(2).to_matrix() @ self.J1_inverse()
            self._Rpow = [PolyMatrix.identity(self.chart), R]
        return self._Rpow[1]

    R = recursion_operator

    def R_power(self, k: int) -> PolyMatrix:
        self.recursion_operator()
        while len(self._Rpow) <= k:
            self._Rpow.append(self._Rpow[-1] @ self._Rpow[1])
        return self._Rpow[k]

    def det_R(self) -> Poly:
        if self._detR is None:
            self._detR = determinant(self.recursion_operator().rows)
        return self._detR

    def det_R_constant(self) -> Fraction:
        """c with det R = c (det L o F)^2, found by exact division."""
        q = exact_divide(self.det_R(), self.pullback(self.flaschka.det_L()) ** 2)
        if not q.is_constant():
            raise ArithmeticError(f"det R / (det L o F)^2 is not constant: {q.to_text()}")
        return Fraction(q.constant_value())

    # -- fields and functions ---------------------------------------------
    def build_Z0(self) -> PolyVectorField:
        N = self.N
        comps = [self.chart.const(N - 2 * i + 1) for i in range(1, N + 1)]
        comps += [self.p(i) for i in range(1, N + 1)]
        return PolyVectorField(self.chart, comps)

    def build_Zi(self, i: int) -> PolyVectorField:
        if i < 0:
            raise ValueError("master symmetries Z_i need i >= 0")
        if i not in self._Z:
            Z0 = self.build_Z0()
            self._Z[i] = Z0 if i == 0 else self.R_power(i).apply(Z0)
        return self._Z[i]

    Z = build_Zi

    def pullback(self, f: Poly) -> Poly:
        """Compose a Flaschka-chart polynomial with a_i = e_i/2, b_i = -p_i/2."""
        fl = f.chart
        subs = {}
        for k, g in enumerate(fl.generators):
            idx = int(g.name[1:])
            subs[k] = self.e(idx).scale(HALF) if g.name[0] == "a" else self.p(idx).scale(-HALF)
        out = self.chart.zero()
        for m, c in f.terms.items():
            t = self.chart.const(c)
            for k, e in enumerate(m):
                if e:
                    t = t * subs[k] ** e
            out = out + t
        return out

    def hamiltonian(self, k: int) -> Poly:
        """h_1 = -2 sum p_i, h_2 = the Toda Hamiltonian, h_k = 4 H_k composed with the Flaschka map."""
        if k < 1:
            raise ValueError("h_k is indexed from 1")
        if k not in self._h:
            if k == 1:
                h = sum((self.p(i) for i in range(1, self.N + 1)), self.chart.zero()).scale(-2)
            elif k == 2:
                h = sum((self.p(i) ** 2 for i in range(1, self.N + 1)), self.chart.zero()).scale(HALF)
                h = h + sum((self.e(i) ** 2 for i in range(1, self.N)), self.chart.zero())
            else:
                h = self.pullback(self.flaschka.H(k)).scale(4)
            self._h[k] = h
        return self._h[k]

    h = hamiltonian

    def lenard_gate(self, k: int) -> None:
        """Raise when J_2 grad h_k != J_1 grad h_{k+1}; h_{k+1} must not be used otherwise."""
        lhs = hamiltonian_vf(self.J(2), self.h(k).gradient())
        rhs = hamiltonian_vf(self.J(1), self.h(k + 1).gradient())
        diff = lhs - rhs
        if not diff.is_zero():
            raise ArithmeticError(f"calibration error: J_2 dh_{k} != J_1 dh_{k + 1}: {diff!r}")

    def X_h(self, k: int) -> PolyVectorField:
        """Hamiltonian field of h_k with respect to the symplectic J_1."""
        return hamiltonian_vf(self.J(1), self.h(k).gradient())

    def modular_field_qp(self, j: int) -> PolyVectorField:
        if j not in self._Y:
            self._Y[j] = modular_vf(self.J(j))
        return self._Y[j]

    Y = modular_field_qp

    def pushforward_map(self) -> "PushforwardMap":
        if self._push is None:
            self._push = PushforwardMap(self)
        return self._push

    def pushforward(self, obj):
        return self.pushforward_map().push(obj)

    # -- identity sides ---------------------------------------------------
    def sides_jacobi(self, j: int):
        J = self.J(j)
        return [(f"[J_{j},J_{j}]", schouten_bb(J, J), None)]

    def sides_conformal(self):
        Z0 = self.build_Z0()
        return [("L_Z0 J_1", lie_derivative_bivector(Z0, self.J(1)), -self.J(1)),
                ("L_Z0 J_2", lie_derivative_bivector(Z0, self.J(2)), None),
                ("Z0(h_1)", apply_vf(Z0, self.h(1)), self.h(1)),
                ("Z0(h_2)", apply_vf(Z0, self.h(2)), self.h(2) * 2)]

    def sides_oevel(self, i: int, k: int):
        Zi = self.Z(i)
        out = []
        if k >= 1:
            out.append((f"Z_{i}(h_{k})", apply_vf(Zi, self.h(k)), self.h(i + k) * (i + k)))
            c = k - i - 2
            rhs = self.J(i + k) * c if c else None
            out.append((f"L_Z{i} J_{k}", lie_derivative_bivector(Zi, self.J(k)), rhs))
        out.append((f"[Z_{i},Z_{k}]", lie_bracket(Zi, self.Z(k)), self.Z(i + k) * (k - i)))
        return out

    def sides_d_z1(self):
        return [("D(Z_1)", divergence(self.Z(1)), self.h(1).scale(HALF))]

    def sides_ham2(self, j: int):
        dR = self.det_R()
        lhs = hamiltonian_vf(self.J(j), self.h(1).gradient()) * dR
        rhs = hamiltonian_vf(self.J(j + 1), dR.gradient()) * 2
        return [(f"detR J_{j} dh_1 - 2 J_{j + 1} d(detR)", lhs, rhs)]

    def sides_main3(self, j: int):
        dR = self.det_R()
        lhs = self.Y(j) * dR * 2
        rhs = hamiltonian_vf(self.J(j), dR.gradient()) * (j - 1)
        return [(f"2 detR Y_{j}", lhs, rhs)]

    def sides_iterative(self, j: int):
        if j < 2:
            raise ValueError("the iterative formula starts at j = 2")
        rhs = self.R_power(j - 1).apply(self.Y(2)) * j
        return [(f"Y_{j + 1}", self.Y(j + 1), rhs)]

    def sides_lenard_h(self, k: int):
        return [(f"J_2 dh_{k} - J_1 dh_{k + 1}", hamiltonian_vf(self.J(2), self.h(k).gradient()),
                 hamiltonian_vf(self.J(1), self.h(k + 1).gradient()))]

    def sides_hierarchy(self, k: int):
        return [(f"X_h{k} - R^{k - 1} X_h1", self.X_h(k), self.R_power(k - 1).apply(self.X_h(1)))]

    def sides_pushforward_J(self, j: int):
        return [(f"F_* J_{j}", self.pushforward(self.J(j)), self.flaschka.pi(j))]

    def sides_pushforward_h(self, k: int):
        return [(f"F_* h_{k}", self.pushforward(self.h(k)), self.flaschka.H(k) * 4)]

    def sides_pushforward_Z(self, i: int):
        """Compares F_* Z_i with the Flaschka master symmetry X_i (reported, not claimed)."""
        return [(f"F_* Z_{i} - X_{i}", self.pushforward(self.Z(i)), self.flaschka.X(i))]

    # -- reports ----------------------------------------------------------
    def _report(self, identity, indices, sides, multiplier=None) -> IdentityReport:
        return run_exact(identity, ANCHORS[identity], CHART, self.N, indices, lambda: sides, multiplier)

    def verify_main3(self, j: int) -> IdentityReport:
        return self._report("main3", (j,), self.sides_main3(j), "2 det R")

    def verify_iterative(self, j: int) -> IdentityReport:
        return self._report("iterative", (j,), self.sides_iterative(j))

    def verify_ham2(self, j: int) -> IdentityReport:
        return self._report("ham2", (j,), self.sides_ham2(j), "det R")

    def verify_oevel(self, i: int, k: int) -> IdentityReport:
        return self._report("oevel", (i, k), self.sides_oevel(i, k))


class PushforwardMap:
    """Push natural-chart objects through the Flaschka map F(q, p) = (a, b)."""

    def __init__(self, system: NaturalSystem):
        self.source = system.chart
        self.target = flaschka_chart(system.N)
        self.N = system.N
        N = system.N
        z = self.source.zero()
        rows = []
        for i in range(1, N):
            row = [z] * (2 * N)
            quarter = system.e(i).scale(Fraction(1, 4))
            row[system.iq(i)] = quarter
            row[system.iq(i + 1)] = -quarter
            rows.append(row)
        for i in range(1, N + 1):
            row = [z] * (2 * N)
            row[system.ip(i)] = self.source.const(-HALF)
            rows.append(row)
        self.jacobian = PolyMatrix(rows)
        src, tgt = self.source, self.target
        self._q_slots = [src.index[f"q{i}"] for i in range(1, N + 1)]
        self._rewrite = {}
        for i in range(1, N):
            self._rewrite[src.index[f"e{i}"]] = tgt.gen(f"a{i}").scale(2)
        for i in range(1, N + 1):
            self._rewrite[src.index[f"p{i}"]] = tgt.gen(f"b{i}").scale(-2)

    def scalar(self, f: Poly) -> Poly:
        out = self.target.zero()
        for m, c in f.terms.items():
            if any(m[k] for k in self._q_slots):
                raise NotProjectableError("bare q-dependence survives",
                                          Poly(f.chart, {m: c}).to_text())
            t = self.target.const(c)
            # e_i first, then p_i
            for k in sorted(self._rewrite, key=lambda k: self.source.generators[k].kind != "exponential"):
                if m[k]:
                    t = t * self._rewrite[k] ** m[k]
            out = out + t
        return out

    def push(self, obj):
        if isinstance(obj, Poly):
            return self.scalar(obj)
        if isinstance(obj, PolyVectorField):
            comps = self.jacobian.apply(list(obj.components))
            return PolyVectorField(self.target, [self.scalar(c) for c in comps])
        if isinstance(obj, PolyBivector):
            DF = self.jacobian
            M = DF @ obj.to_matrix() @ DF.transpose()
            n = self.target.dim
            up = {}
            for a in range(n):
                for b in range(a + 1, n):
                    up[(a, b)] = self.scalar(M[a, b])
            return PolyBivector(self.target, up)
        raise TypeError(f"cannot push forward {type(obj).__name__}")


ANCHORS = {
    "jacobi-qp": "[J_j, J_j] = 0",
    "lenard-qp": "J_2 grad h_k = J_1 grad h_{k+1}",
    "conformal": "L_{Z_0} J_1 = -J_1, L_{Z_0} J_2 = 0, Z_0(h_1) = h_1, Z_0(h_2) = 2 h_2",
    "oevel": "Z_i(h_k) = (i+k) h_{i+k}, L_{Z_i} J_k = (k-i-2) J_{i+k}, [Z_i, Z_k] = (k-i) Z_{i+k}",
    "d-z1": "D(Z_1) = h_1 / 2",
    "ham2": "X^{J_j}_{h_1} = 4 X^{J_{j+1}}_f, f = ln sqrt(det R)",
    "main3": "Y_j = (j-1) X^{J_j}_f, f = ln sqrt(det R)",
    "iterative": "Y_{j+1} = j R^{j-1} Y_2",
    "hierarchy-qp": "X_{h_k}^{J_1} = R^{k-1} X_{h_1}^{J_1}",
    "pushforward-j": "F_* J_j = pi_j",
    "pushforward-h": "F_* h_k = 4 H_k",
    "pushforward-z": "F_* Z_i compared with X_i",
}
