from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from todamodular.exactalg import ChartMismatchError, Poly, polynomial_chart
from todamodular.flaschka import FlaschkaSystem
from todamodular.natural import NaturalSystem
from todamodular.tensor import (
    PolyBivector,
    PolyMatrix,
    PolyTrivector,
    PolyVectorField,
    apply_vf,
    bivector_function_bracket,
    divergence,
    hamiltonian_vf,
    jacobiator,
    lie_bracket,
    lie_derivative_bivector,
    matrix_ops,
    modular_vf,
    poisson_bracket,
    schouten_bb,
)

R3 = polynomial_chart("R3", ("x1", "x2", "x3"))
R2 = polynomial_chart("R2", ("x1", "x2"))
x1, x2, x3 = (R3.gen(n) for n in ("x1", "x2", "x3"))

small = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def polys(chart, max_deg=2, max_terms=3, lo=0):
    mono = st.lists(st.integers(lo, max_deg), min_size=chart.nvars, max_size=chart.nvars).map(tuple)
    return st.dictionaries(mono, small, max_size=max_terms).map(lambda d: Poly.from_terms(chart, d))


def fields(chart, **kw):
    return st.lists(polys(chart, **kw), min_size=chart.dim, max_size=chart.dim).map(
        lambda cs: PolyVectorField(chart, cs))


def bivectors(chart, **kw):
    n = chart.dim
    keys = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return st.lists(polys(chart, **kw), min_size=len(keys), max_size=len(keys)).map(
        lambda vs: PolyBivector(chart, dict(zip(keys, vs))))


# -- brackets and fields --------------------------------------------------------

def test_pi1_bracket_anchor():
    S = FlaschkaSystem(3)
    assert poisson_bracket(S.pi(1), S.a(1), S.b(1)) == -S.a(1)
    assert poisson_bracket(S.pi(1), S.a(2), S.b(3)) == S.a(2)


def test_bracket_antisymmetric_on_self():
    S = FlaschkaSystem(3)
    f = S.H(3) + S.a(1) * S.b(2)
    assert poisson_bracket(S.pi(2), f, f).is_zero()


def test_invariants_commute():
    S = FlaschkaSystem(3)
    assert poisson_bracket(S.pi(1), S.H(1), S.H(2)).is_zero()


def test_toda_vector_field():
    S = FlaschkaSystem(2)
    a1, b1, b2 = S.a(1), S.b(1), S.b(2)
    X = hamiltonian_vf(S.pi(1), S.H(2).gradient())
    assert X == PolyVectorField(S.chart, [a1 * (b2 - b1), a1 ** 2 * 2, a1 ** 2 * -2])


def test_log_gradient_field():
    S = FlaschkaSystem(2)
    X = hamiltonian_vf(S.pi(1), S.grad_f())
    assert X == PolyVectorField(S.chart, [0, 1, -1])


def test_casimir_field_vanishes():
    S = FlaschkaSystem(3)
    assert hamiltonian_vf(S.pi(1), S.H(1).gradient()).is_zero()


def test_hamiltonian_vf_matches_bracket():
    S = FlaschkaSystem(3)
    f, g = S.H(3), S.a(1) * S.b(3)
    # X_f(g) = {g, f}
    assert apply_vf(hamiltonian_vf(S.pi(2), f.gradient()), g) == poisson_bracket(S.pi(2), g, f)


def test_hamiltonian_vf_shape():
    S = FlaschkaSystem(2)
    with pytest.raises(ValueError):
        hamiltonian_vf(S.pi(1), [S.chart.zero()])


def test_apply_vf_examples():
    S = FlaschkaSystem(3)
    assert apply_vf(S.X(1), S.H(1)) == S.H(2) * 2
    assert apply_vf(S.X(1), S.chart.const(7)).is_zero()
    T = NaturalSystem(2)
    assert apply_vf(T.Z(0), T.h(2)) == T.h(2) * 2


def test_lie_bracket_examples():
    S = FlaschkaSystem(3)
    assert lie_bracket(S.X(1), S.X(2)) == S.X(3)
    assert lie_bracket(S.X(2), S.X(2)).is_zero()
    T = NaturalSystem(2)
    assert lie_bracket(T.Z(1), T.Z(2)) == T.Z(3)


def test_lie_derivative_examples():
    S = FlaschkaSystem(3)
    assert lie_derivative_bivector(S.X(1), S.pi(1)) == S.pi(2) * -2
    T = NaturalSystem(2)
    assert lie_derivative_bivector(T.Z(0), T.J(1)) == -T.J(1)
    assert lie_derivative_bivector(T.Z(0), T.J(2)).is_zero()


def test_chart_mismatch_rejected():
    with pytest.raises(ChartMismatchError):
        lie_bracket(FlaschkaSystem(2).X(1), FlaschkaSystem(3).X(1))
    with pytest.raises(ChartMismatchError):
        apply_vf(FlaschkaSystem(2).X(1), FlaschkaSystem(3).H(1))


# -- Schouten -------------------------------------------------------------------

def test_schouten_examples():
    S = FlaschkaSystem(4)
    assert schouten_bb(S.pi(1), S.pi(1)).is_zero()
    assert schouten_bb(S.pi(1), S.pi(2)).is_zero()


def test_schouten_detects_non_poisson():
    W = PolyBivector.from_names(R3, {("x1", "x2"): x3, ("x2", "x3"): x3, ("x3", "x1"): x2})
    J = jacobiator(W)
    assert J.entry(0, 1, 2) == x2
    assert schouten_bb(W, W).entry(0, 1, 2) == x2 * 2


@settings(max_examples=10, deadline=None)
@given(bivectors(R3))
def test_schouten_is_twice_jacobiator(B):
    assert schouten_bb(B, B) == jacobiator(B) * 2


@settings(max_examples=200, deadline=None)
@given(bivectors(R3), bivectors(R3))
def test_schouten_symmetric(P, Q):
    assert schouten_bb(P, Q) == schouten_bb(Q, P)


def test_trivector_antisymmetry():
    T = PolyTrivector(R3, {(2, 0, 1): x1})
    assert T.entry(0, 1, 2) == x1
    assert T.entry(1, 0, 2) == -x1
    assert T.entry(0, 0, 2).is_zero()


def test_bivector_antisymmetry():
    B = PolyBivector(R3, {(0, 2): x2})
    assert B.entry(2, 0) == -x2
    assert B.entry(1, 1).is_zero()
    assert PolyBivector.from_matrix(R3, B.to_matrix()) == B


# -- divergence and modular fields ---------------------------------------------

def test_divergence_of_X1():
    S = FlaschkaSystem(3)
    expected = sum((S.b(i) * -i + S.b(i + 1) * (i + 2) for i in range(1, 3)), S.chart.zero())
    assert divergence(S.X(1)) == expected + S.H(1) * 2


def test_divergence_constant_field():
    assert divergence(PolyVectorField(R3, [1, 2, 3])).is_zero()


def test_divergence_Z1():
    T = NaturalSystem(2)
    assert divergence(T.Z(1)) == T.h(1).scale(Fraction(1, 2))


@pytest.mark.parametrize("N", [2, 3, 4])
def test_modular_field_of_pi1(N):
    S = FlaschkaSystem(N)
    comps = [0] * (2 * N - 1)
    comps[N - 1] = 1
    comps[-1] = -1
    assert modular_vf(S.pi(1)) == PolyVectorField(S.chart, comps)


def test_modular_field_examples():
    assert modular_vf(NaturalSystem(2).J(1)).is_zero()
    S = FlaschkaSystem(2)
    assert modular_vf(S.pi(2)) == PolyVectorField(S.chart, [0, S.b(1), -S.b(2)])


@settings(max_examples=200, deadline=None)
@given(bivectors(R3, max_deg=0))
def test_modular_field_of_constant_tensor(B):
    assert modular_vf(B).is_zero()


def test_volume_rescaling_pi1():
    S = FlaschkaSystem(2)
    a = S.a(1) ** 2
    lhs = modular_vf(S.pi(1), density=a)
    grad_ln_a = [S.a(1) ** -1 * 2, S.chart.zero(), S.chart.zero()]
    assert lhs == modular_vf(S.pi(1)) + hamiltonian_vf(S.pi(1), grad_ln_a)


monomial_exps = st.lists(st.integers(-2, 2), min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(bivectors(R3), monomial_exps, small.filter(lambda c: c > 0))
def test_volume_rescaling_property(B, exps, c):
    # X_{a omega} = X_omega + X_{ln a} for a monomial density a
    a = R3.monomial(dict(zip(R3.coordinates, exps)), c)
    grad_ln_a = [R3.coord(k) ** -1 * e if e else R3.zero() for k, e in enumerate(exps)]
    assert modular_vf(B, density=a) == modular_vf(B) + hamiltonian_vf(B, grad_ln_a)


@settings(max_examples=200, deadline=None)
@given(bivectors(R3), fields(R3))
def test_divergence_derivation_bivector(B, X):
    # D[B, X] = [D(B), X] - [B, D(X)] with [B, X] = -L_X B and [B, h] = -B grad h
    lhs = modular_vf(-lie_derivative_bivector(X, B))
    rhs = lie_bracket(modular_vf(B), X) - bivector_function_bracket(B, divergence(X))
    assert lhs == rhs


@settings(max_examples=100, deadline=None)
@given(bivectors(R2, lo=-1), fields(R2, lo=-1))
def test_divergence_derivation_bivector_laurent(B, X):
    lhs = modular_vf(-lie_derivative_bivector(X, B))
    rhs = lie_bracket(modular_vf(B), X) - bivector_function_bracket(B, divergence(X))
    assert lhs == rhs


@settings(max_examples=200, deadline=None)
@given(fields(R3), fields(R3))
def test_divergence_derivation_fields(X, Y):
    # D[X, Y] = X(D(Y)) - Y(D(X))
    assert divergence(lie_bracket(X, Y)) == apply_vf(X, divergence(Y)) - apply_vf(Y, divergence(X))


@settings(max_examples=200, deadline=None)
@given(fields(R3), fields(R3), polys(R3))
def test_lie_bracket_antisymmetric(X, Y, h):
    assert lie_bracket(X, Y) == -lie_bracket(Y, X)
    assert apply_vf(lie_bracket(X, Y), h) == apply_vf(X, apply_vf(Y, h)) - apply_vf(Y, apply_vf(X, h))


# -- matrices -------------------------------------------------------------------

def test_recursion_operator_examples():
    T = NaturalSystem(2)
    R = T.R()
    assert matrix_ops("power", R, 0) == PolyMatrix.identity(T.chart, 4)
    assert matrix_ops("mul", R, T.J(1).to_matrix()) == T.J(2).to_matrix()
    assert matrix_ops("apply_to_vf", R, T.X_h(1)) == T.X_h(2)


def test_matrix_transpose_and_trace():
    M = PolyMatrix([[x1, x2], [x3, x1 * 2]])
    assert matrix_ops("transpose", M) == PolyMatrix([[x1, x3], [x2, x1 * 2]])
    assert M.trace() == x1 * 3
    with pytest.raises(ValueError):
        matrix_ops("inverse", M)
