"""The Toda hierarchy in Flaschka coordinates (a_1..a_{N-1}, b_1..b_N).

Out-of-range symbols (a_0, a_N, empty prefix sums) are treated as zero.
Functions of logarithmic type are never represented: f = ln(a_1 ... a_{N-1})
enters through its Laurent gradient (1/a_i), and g = ln det L through
det L, with identities multiplied through by det L.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .exactalg import Chart, Poly, determinant, polynomial_chart
from .reports import IdentityReport, run_exact
from .tensor import (
    PolyBivector,
    PolyMatrix,
    PolyVectorField,
    divergence,
    hamiltonian_vf,
    lie_bracket,
    lie_derivative_bivector,
    modular_vf,
    apply_vf,
    poisson_bracket,
    schouten_bb,
)

CHART = "flaschka"


def _check_n(N: int):
    if not isinstance(N, int) or N < 2:
        raise ValueError(f"lattice size must be an integer >= 2, got {N!r}")


@lru_cache(maxsize=None)
def flaschka_chart(N: int) -> Chart:
    _check_n(N)
    names = [f"a{i}" for i in range(1, N)] + [f"b{i}" for i in range(1, N + 1)]
    return polynomial_chart(f"flaschka[N={N}]", names)


class _Symbols:
    def __init__(self, N: int):
        self.N = N
        self.chart = flaschka_chart(N)

    def a(self, i: int) -> Poly:
        return self.chart.gen(f"a{i}") if 1 <= i <= self.N - 1 else self.chart.zero()

    def b(self, i: int) -> Poly:
        return self.chart.gen(f"b{i}") if 1 <= i <= self.N else self.chart.zero()

    def ia(self, i: int) -> int:
        return i - 1

    def ib(self, i: int) -> int:
        return self.N - 2 + i

    def prefix_b(self, m: int) -> Poly:
        s = self.chart.zero()
        for j in range(1, m + 1):
            s = s + self.b(j)
        return s


def build_pi1(N: int) -> PolyBivector:
    s = _Symbols(N)
    up = {}
    for i in range(1, N):
        up[(s.ia(i), s.ib(i))] = -s.a(i)
        up[(s.ia(i), s.ib(i + 1))] = s.a(i)
    return PolyBivector(s.chart, up)


def build_pi2(N: int) -> PolyBivector:
    s = _Symbols(N)
    up = {}
    half = Fraction(1, 2)
    for i in range(1, N):
        if i + 1 <= N - 1:
            up[(s.ia(i), s.ia(i + 1))] = (s.a(i) * s.a(i + 1)).scale(half)
        up[(s.ia(i), s.ib(i))] = -s.a(i) * s.b(i)
        up[(s.ia(i), s.ib(i + 1))] = s.a(i) * s.b(i + 1)
        up[(s.ib(i), s.ib(i + 1))] = (s.a(i) ** 2).scale(2)
    return PolyBivector(s.chart, up)


def build_L(N: int) -> PolyMatrix:
    """Symmetric tridiagonal Jacobi matrix: diagonal b, off-diagonal a."""
    s = _Symbols(N)
    z = s.chart.zero()
    rows = [[z] * N for _ in range(N)]
    for i in range(N):
        rows[i][i] = s.b(i + 1)
        if i + 1 < N:
            rows[i][i + 1] = rows[i + 1][i] = s.a(i + 1)
    return PolyMatrix(rows)


def build_B(N: int) -> PolyMatrix:
    """Skew partner of L in the Lax pair dL/dt = [B, L]."""
    s = _Symbols(N)
    z = s.chart.zero()
    rows = [[z] * N for _ in range(N)]
    for i in range(N - 1):
        rows[i][i + 1] = s.a(i + 1)
        rows[i + 1][i] = -s.a(i + 1)
    return PolyMatrix(rows)


def build_X1(N: int) -> PolyVectorField:
    s = _Symbols(N)
    a, b = s.a, s.b
    A = [a(i) * b(i) * (-i) + a(i) * b(i + 1) * (i + 2) for i in range(1, N)]
    B = [(a(i) ** 2) * (2 * i + 3) + (a(i - 1) ** 2) * (1 - 2 * i) + b(i) ** 2
         for i in range(1, N + 1)]
    return PolyVectorField(s.chart, A + B)


def build_X2(N: int) -> PolyVectorField:
    # the a_{i-1}^2 term with coefficient (4 - 2i) carries a factor b_i so that
    # every term is cubic; without it X_2(H_1) = 3 H_3 fails at i = N >= 3
    s = _Symbols(N)
    a, b, S = s.a, s.b, s.prefix_b
    C = []
    for i in range(1, N):
        C.append(
            a(i - 1) ** 2 * a(i) * (2 - i)
            + a(i) * b(i) ** 2 * (1 - i)
            + a(i) * b(i) * b(i + 1)
            + a(i) * a(i + 1) ** 2 * (i + 1)
            + a(i) * b(i + 1) ** 2 * (i + 1)
            + a(i) ** 3
            + S(i - 1) * a(i) * (b(i + 1) - b(i))
        )
    D = []
    for i in range(1, N + 1):
        D.append(
            S(i - 1) * a(i) ** 2 * 2
            - S(i - 2) * a(i - 1) ** 2 * 2
            + a(i) ** 2 * b(i) * (2 * i + 2)
            + a(i) ** 2 * b(i + 1) * (2 * i + 1)
            + a(i - 1) ** 2 * b(i - 1) * (3 - 2 * i)
            + a(i - 1) ** 2 * b(i) * (4 - 2 * i)
            + b(i) ** 3
        )
    # shift by -1/2 H_1 times the Toda field (a_i(b_{i+1}-b_i), 2(a_i^2-a_{i-1}^2)).
    # H_1 is a pi_1-Casimir and the Toda field kills every H_k, so (iii) and
    # L_{X_2} pi_1 = -3 pi_3 are untouched; without the shift
    # L_{X_2} pi_3 = -pi_5 fails from N = 3 on
    H1 = S(N)
    half = Fraction(1, 2)
    C = [c - H1 * a(i) * (b(i + 1) - b(i)) * half for i, c in enumerate(C, 1)]
    D = [d - H1 * (a(i) ** 2 - a(i - 1) ** 2) for i, d in enumerate(D, 1)]
    return PolyVectorField(s.chart, C + D)


class FlaschkaSystem:
    """Lazily built, cached hierarchy objects for one lattice size."""

    def __init__(self, N: int):
        _check_n(N)
        self.N = N
        self.sym = _Symbols(N)
        self.chart = self.sym.chart
        self._pi: dict[int, PolyBivector] = {}
        self._X: dict[int, PolyVectorField] = {}
        self._H: dict[int, Poly] = {}
        self._Y: dict[int, PolyVectorField] = {}
        self._Lpow: list[PolyMatrix] = []
        self._detL: Poly | None = None

    # -- basic objects ----------------------------------------------------
    def a(self, i: int) -> Poly:
        return self.sym.a(i)

    def b(self, i: int) -> Poly:
        return self.sym.b(i)

    def L(self) -> PolyMatrix:
        if not self._Lpow:
            self._Lpow = [PolyMatrix.identity(self.chart, self.N), build_L(self.N)]
        return self._Lpow[1]

    def L_power(self, k: int) -> PolyMatrix:
        self.L()
        while len(self._Lpow) <= k:
            self._Lpow.append(self._Lpow[-1] @ self._Lpow[1])
        return self._Lpow[k]

    def invariant(self, k: int) -> Poly:
        """H_k = tr(L^k) / k."""
        if k < 1:
            raise ValueError("invariants are indexed from 1")
        if k not in self._H:
            self._H[k] = self.L_power(k).trace().scale(Fraction(1, k))
        return self._H[k]

    H = invariant

    def det_L(self) -> Poly:
        if self._detL is None:
            self._detL = determinant(self.L().rows)
        return self._detL

    def grad_f(self) -> list[Poly]:
        """Gradient of f = ln(a_1 ... a_{N-1}): (1/a_1, ..., 1/a_{N-1}, 0, ..., 0)."""
        z = self.chart.zero()
        return [self.a(i) ** -1 for i in range(1, self.N)] + [z] * self.N

    def grad(self, p: Poly) -> list[Poly]:
        return p.gradient()

    # -- hierarchy --------------------------------------------------------
    def master_symmetry(self, n: int) -> PolyVectorField:
        if n < 1:
            raise ValueError("master symmetries are built for n >= 1")
        if n not in self._X:
            if n == 1:
                self._X[1] = build_X1(self.N)
            elif n == 2:
                self._X[2] = build_X2(self.N)
            else:
                # [X_1, X_{n-1}] = (n - 2) X_n
                prev = self.master_symmetry(n - 1)
                self._X[n] = lie_bracket(self.master_symmetry(1), prev) * Fraction(1, n - 2)
        return self._X[n]

    X = master_symmetry

    def poisson_tensor(self, j: int) -> PolyBivector:
        if j < 1:
            raise ValueError("Poisson tensors are indexed from 1")
        if j not in self._pi:
            if j == 1:
                self._pi[1] = build_pi1(self.N)
            elif j == 2:
                self._pi[2] = build_pi2(self.N)
            elif j == 4:
                self._pi[4] = lie_derivative_bivector(self.X(2), self.poisson_tensor(2)) * Fraction(-1, 2)
            else:
                # L_{X_1} pi_{j-1} = (j - 4) pi_j
                self._pi[j] = lie_derivative_bivector(self.X(1), self.poisson_tensor(j - 1)) \
                    * Fraction(1, j - 4)
        return self._pi[j]

    pi = poisson_tensor

    def modular_field(self, j: int) -> PolyVectorField:
        if j not in self._Y:
            self._Y[j] = modular_vf(self.poisson_tensor(j))
        return self._Y[j]

    Y = modular_field

    def hvf(self, j: int, grad: list[Poly]) -> PolyVectorField:
        return hamiltonian_vf(self.poisson_tensor(j), grad)

    # -- identity sides ---------------------------------------------------
    def sides_jacobi(self, j: int):
        P = self.pi(j)
        return [(f"[pi_{j},pi_{j}]", schouten_bb(P, P), None)]

    def sides_compatibility(self, i: int, j: int):
        return [(f"[pi_{i},pi_{j}]", schouten_bb(self.pi(i), self.pi(j)), None)]

    def sides_involution(self, j: int, i: int, k: int):
        return [(f"{{H_{i},H_{k}}}_{j}", poisson_bracket(self.pi(j), self.H(i), self.H(k)), None)]

    def sides_lenard(self, j: int, k: int):
        lhs = self.hvf(j, self.H(k).gradient())
        rhs = self.hvf(j - 1, self.H(k + 1).gradient())
        return [(f"pi_{j} dH_{k} - pi_{j - 1} dH_{k + 1}", lhs, rhs)]

    def sides_grading(self, n: int, k: int):
        return [(f"X_{n}(H_{k})", apply_vf(self.X(n), self.H(k)), self.H(n + k) * (n + k))]

    def sides_deformation(self, i: int, j: int):
        lhs = lie_derivative_bivector(self.X(i), self.pi(j))
        c = j - i - 2
        rhs = self.pi(i + j) * c if c else PolyBivector(self.chart)
        return [(f"L_X{i} pi_{j}", lhs, rhs)]

    def sides_bracket(self, i: int, j: int):
        return [(f"[X_{i},X_{j}]", lie_bracket(self.X(i), self.X(j)), self.X(i + j) * (j - i))]

    def sides_divergence_X(self, n: int):
        X = self.X(n)
        Xf = sum((X[k] * g for k, g in enumerate(self.grad_f()) if not g.is_zero()), self.chart.zero())
        return [(f"D(X_{n})", divergence(X), Xf + self.H(n) * (n * (n + 1)))]

    def sides_ham(self, j: int):
        dL = self.det_L()
        lhs = self.hvf(j, self.H(1).gradient()) * dL
        rhs = self.hvf(j + 1, dL.gradient())
        return [(f"detL pi_{j} dH_1 - pi_{j + 1} d(detL)", lhs, rhs)]

    def sides_main2(self, j: int):
        dL = self.det_L()
        lhs = self.Y(j) * dL
        rhs = self.hvf(j, self.grad_f()) * dL + self.hvf(j, dL.gradient()) * (j - 1)
        return [(f"detL Y_{j}", lhs, rhs)]

    def sides_corollary_a(self, i: int, j: int):
        return [(f"Y_{i}(H_{j}) - Y_{j}(H_{i})", apply_vf(self.Y(i), self.H(j)), apply_vf(self.Y(j), self.H(i)))]

    def sides_corollary_b(self, i: int, j: int):
        lhs = lie_derivative_bivector(self.Y(i), self.pi(j))
        rhs = -lie_derivative_bivector(self.Y(j), self.pi(i))
        return [(f"L_Y{i} pi_{j} + L_Y{j} pi_{i}", lhs, rhs)]

    def sides_modular_class(self, j: int):
        Y = self.Y(j)
        return [(f"L_Y{j} pi_{j}", lie_derivative_bivector(Y, self.pi(j)), None),
                (f"div Y_{j}", divergence(Y), None)]

    def sides_pi4_bridge(self):
        """pi_4 from -1/2 L_{X_2} pi_2 must continue the L_{X_1} ladder: L_{X_1} pi_4 = pi_5 and
        L_{X_1} pi_3 = 0."""
        return [("L_X1 pi_4 - pi_5", lie_derivative_bivector(self.X(1), self.pi(4)), self.pi(5)),
                ("L_X1 pi_3", lie_derivative_bivector(self.X(1), self.pi(3)), None)]

    def sides_eigen_lenard(self, j: int, K: int):
        out = []
        for k in range(1, K + 1):
            out.extend(self.sides_lenard(j, k))
        return out

    # -- reports ----------------------------------------------------------
    def _report(self, identity, anchor, indices, sides, multiplier=None) -> IdentityReport:
        return run_exact(identity, anchor, CHART, self.N, indices, lambda: sides, multiplier)

    def verify_main2(self, j: int) -> IdentityReport:
        return self._report("main2", ANCHORS["main2"], (j,), self.sides_main2(j), "det L")

    def verify_ham(self, j: int) -> IdentityReport:
        return self._report("ham", ANCHORS["ham"], (j,), self.sides_ham(j), "det L")

    def verify_corollary(self, i: int, j: int) -> list[IdentityReport]:
        return [self._report("corollary-a", ANCHORS["corollary-a"], (i, j), self.sides_corollary_a(i, j)),
                self._report("corollary-b", ANCHORS["corollary-b"], (i, j), self.sides_corollary_b(i, j))]

    def lenard_eigen_check_symbolic(self, j: int, K: int = 3) -> IdentityReport:
        if j < 2:
            raise ValueError("the ladder relation needs j >= 2")
        return self._report("theorem-vi", ANCHORS["theorem-vi"], (j, K), self.sides_eigen_lenard(j, K))


ANCHORS = {
    "jacobi": "[pi_j, pi_j] = 0 (pi_j Poisson)",
    "compatibility": "[pi_i, pi_j] = 0",
    "involution": "{H_i, H_k}_{pi_j} = 0",
    "lenard": "pi_2 grad H_k = pi_1 grad H_{k+1}",
    "theorem-iii": "X_n(H_k) = (n+k) H_{n+k}",
    "theorem-iv": "L_{X_i} pi_j = (j-i-2) pi_{i+j}",
    "theorem-v": "[X_i, X_j] = (j-i) X_{i+j}",
    "theorem-vi": "pi_j grad H_k = pi_{j-1} grad H_{k+1}",
    "d-xn": "D(X_n) = X_n(f) + n(n+1) H_n, f = ln(a_1...a_{N-1})",
    "ham": "X^{pi_j}_{H_1} = X^{pi_{j+1}}_{ln det L}",
    "main2": "Y_j = X^{pi_j}_{f + (j-1) ln det L}, f = ln(a_1...a_{N-1})",
    "corollary-a": "Y_i(H_j) = Y_j(H_i)",
    "corollary-b": "L_{Y_i} pi_j = -L_{Y_j} pi_i",
    "modular-class": "L_{Y_j} pi_j = 0, div Y_j = 0",
    "pi4-bridge": "pi_4 = -1/2 L_{X_2} pi_2 continues the L_{X_1} ladder",
}
