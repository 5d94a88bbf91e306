"""Registry of every verifiable identity, with instance grids and both check modes.

Each entry knows how to build its exact sides on a system and, where it pays
off, how to evaluate the two sides pointwise in floating point by combining
tensor values at the sample state instead of the expanded polynomials.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import flaschka as fl
from . import natural as nat
from .exactalg import evaluate_at, generator_values
from .reports import IdentityReport, run_exact, run_numeric, sort_reports
from .tensor import divergence

CHARTS = ("flaschka", "natural")


@lru_cache(maxsize=None)
def system(chart: str, N: int):
    if chart == "flaschka":
        return fl.FlaschkaSystem(N)
    if chart == "natural":
        return nat.NaturalSystem(N)
    raise ValueError(f"unknown chart {chart!r}")


class _At:
    """Float values of chart objects at one point, sharing the generator values."""

    def __init__(self, chart, point: dict):
        self.vals = generator_values(chart, point)

    def s(self, p) -> float:
        return evaluate_at(p, self.vals)

    def v(self, comps) -> np.ndarray:
        comps = comps.components if hasattr(comps, "components") else comps
        return np.array([evaluate_at(c, self.vals) for c in comps])

    def m(self, B) -> np.ndarray:
        n = B.chart.dim
        out = np.zeros((n, n))
        for (i, j), c in B.upper.items():
            out[i, j] = evaluate_at(c, self.vals)
            out[j, i] = -out[i, j]
        return out


# -- pointwise evaluators (Flaschka) -------------------------------------------

def _num_involution(S, x, j, i, k):
    g, P, h = x.v(S.H(i).gradient()), x.m(S.pi(j)), x.v(S.H(k).gradient())
    # the bracket is a cancelling sum; measure it against the size of its terms
    return [("bracket", g @ P @ h, 0.0, np.abs(g) @ np.abs(P) @ np.abs(h))]


def _num_ladder(S, x, j, k):
    return [("ladder", x.m(S.pi(j)) @ x.v(S.H(k).gradient()),
             x.m(S.pi(j - 1)) @ x.v(S.H(k + 1).gradient()))]


def _num_ham(S, x, j):
    dL, gdL = x.s(S.det_L()), x.v(S.det_L().gradient())
    return [("ham", dL * (x.m(S.pi(j)) @ x.v(S.H(1).gradient())), x.m(S.pi(j + 1)) @ gdL)]


def _num_main2(S, x, j):
    dL, gdL = x.s(S.det_L()), x.v(S.det_L().gradient())
    P = x.m(S.pi(j))
    return [("main2", dL * x.v(S.Y(j)), dL * (P @ x.v(S.grad_f())) + (j - 1) * (P @ gdL))]


def _num_grading(S, x, n, k):
    return [("grading", x.v(S.X(n)) @ x.v(S.H(k).gradient()), (n + k) * x.s(S.H(n + k)))]


def _num_d_xn(S, x, n):
    X = S.X(n)
    return [("d-xn", x.s(divergence(X)), x.v(X) @ x.v(S.grad_f()) + n * (n + 1) * x.s(S.H(n)))]


def _num_corollary_a(S, x, i, j):
    return [("corollary-a", x.v(S.Y(i)) @ x.v(S.H(j).gradient()), x.v(S.Y(j)) @ x.v(S.H(i).gradient()))]


# -- pointwise evaluators (natural) --------------------------------------------

def _R_at(S, x) -> np.ndarray:
    J1 = x.m(S.J(1))
    return x.m(S.J(2)) @ (J1.T / 16.0)


def _num_main3(S, x, j):
    dR, gdR = x.s(S.det_R()), x.v(S.det_R().gradient())
    return [("main3", 2 * dR * x.v(S.Y(j)), (j - 1) * (x.m(S.J(j)) @ gdR))]


def _num_ham2(S, x, j):
    dR, gdR = x.s(S.det_R()), x.v(S.det_R().gradient())
    return [("ham2", dR * (x.m(S.J(j)) @ x.v(S.h(1).gradient())), 2 * (x.m(S.J(j + 1)) @ gdR))]


def _num_iterative(S, x, j):
    R = _R_at(S, x)
    return [("iterative", x.v(S.Y(j + 1)), j * (np.linalg.matrix_power(R, j - 1) @ x.v(S.Y(2))))]


def _num_hierarchy(S, x, k):
    R, J1 = _R_at(S, x), x.m(S.J(1))
    return [("hierarchy", J1 @ x.v(S.h(k).gradient()),
             np.linalg.matrix_power(R, k - 1) @ (J1 @ x.v(S.h(1).gradient())))]


def _num_lenard_qp(S, x, k):
    return [("lenard-qp", x.m(S.J(2)) @ x.v(S.h(k).gradient()), x.m(S.J(1)) @ x.v(S.h(k + 1).gradient()))]


# -- registry -------------------------------------------------------------------

@dataclass(frozen=True)
class Entry:
    identity: str
    chart: str
    sides: Callable
    instances: Callable[[int, int], list]
    numeric: Callable | None = None
    multiplier: str | None = None

    @property
    def anchor(self) -> str:
        return (fl.ANCHORS if self.chart == "flaschka" else nat.ANCHORS)[self.identity]


def _pairs(lo, hi):
    return [(i, j) for i in range(lo, hi + 1) for j in range(i + 1, hi + 1)]


ENTRIES: dict[str, Entry] = {e.identity: e for e in [
    # Flaschka chart
    Entry("jacobi", "flaschka", lambda S, j: S.sides_jacobi(j),
          lambda N, L: [(j,) for j in range(1, L + 1)]),
    Entry("compatibility", "flaschka", lambda S, i, j: S.sides_compatibility(i, j),
          lambda N, L: _pairs(1, L)),
    Entry("involution", "flaschka", lambda S, j, i, k: S.sides_involution(j, i, k),
          lambda N, L: [(j, i, k) for j in range(1, min(L, 3) + 1) for i, k in _pairs(1, N)],
          _num_involution),
    Entry("lenard", "flaschka", lambda S, k: S.sides_lenard(2, k),
          lambda N, L: [(k,) for k in range(1, min(L - 1, 3) + 1)],
          lambda S, x, k: _num_ladder(S, x, 2, k)),
    Entry("theorem-iii", "flaschka", lambda S, n, k: S.sides_grading(n, k),
          lambda N, L: [(n, k) for n in range(1, min(L, 3) + 1) for k in range(1, 4)],
          _num_grading),
    Entry("theorem-iv", "flaschka", lambda S, i, j: S.sides_deformation(i, j),
          lambda N, L: [(i, j) for i in (1, 2) for j in (1, 2, 3) if i + j <= L + 1]),
    Entry("theorem-v", "flaschka", lambda S, i, j: S.sides_bracket(i, j),
          lambda N, L: [(i, j) for i, j in _pairs(1, 3) if i + j <= L + 1]),
    Entry("theorem-vi", "flaschka", lambda S, j, k: S.sides_lenard(j, k),
          lambda N, L: [(j, k) for j in range(2, L + 1) for k in range(1, 4)],
          _num_ladder),
    Entry("d-xn", "flaschka", lambda S, n: S.sides_divergence_X(n),
          lambda N, L: [(n,) for n in range(1, min(L, 3) + 1)], _num_d_xn),
    Entry("ham", "flaschka", lambda S, j: S.sides_ham(j),
          lambda N, L: [(j,) for j in range(1, min(L - 1, 3) + 1)], _num_ham, "det L"),
    Entry("main2", "flaschka", lambda S, j: S.sides_main2(j),
          lambda N, L: [(j,) for j in range(1, L + 1)], _num_main2, "det L"),
    Entry("corollary-a", "flaschka", lambda S, i, j: S.sides_corollary_a(i, j),
          lambda N, L: _pairs(1, min(L, 3)), _num_corollary_a),
    Entry("corollary-b", "flaschka", lambda S, i, j: S.sides_corollary_b(i, j),
          lambda N, L: _pairs(1, min(L, 3))),
    Entry("modular-class", "flaschka", lambda S, j: S.sides_modular_class(j),
          lambda N, L: [(j,) for j in range(1, L + 1)]),
    Entry("pi4-bridge", "flaschka", lambda S: S.sides_pi4_bridge(),
          lambda N, L: [()] if L >= 5 else []),
    # natural chart
    Entry("jacobi-qp", "natural", lambda S, j: S.sides_jacobi(j),
          lambda N, L: [(j,) for j in range(1, min(L, 4) + 1)]),
    Entry("conformal", "natural", lambda S: S.sides_conformal(), lambda N, L: [()]),
    Entry("lenard-qp", "natural", lambda S, k: S.sides_lenard_h(k),
          lambda N, L: [(k,) for k in range(1, min(L - 1, 3) + 1)], _num_lenard_qp),
    Entry("hierarchy-qp", "natural", lambda S, k: S.sides_hierarchy(k),
          lambda N, L: [(k,) for k in range(2, min(L, 4) + 1)], _num_hierarchy),
    Entry("oevel", "natural", lambda S, i, k: S.sides_oevel(i, k),
          lambda N, L: [(i, k) for i in range(0, min(L - 1, 2) + 1) for k in range(1, min(L, 3) + 1)
                        if i + k <= L + 1]),
    Entry("d-z1", "natural", lambda S: S.sides_d_z1(), lambda N, L: [()]),
    Entry("ham2", "natural", lambda S, j: S.sides_ham2(j),
          lambda N, L: [(j,) for j in range(1, min(L - 1, 3) + 1)], _num_ham2, "det R"),
    Entry("main3", "natural", lambda S, j: S.sides_main3(j),
          lambda N, L: [(j,) for j in range(1, L + 1)], _num_main3, "2 det R"),
    Entry("iterative", "natural", lambda S, j: S.sides_iterative(j),
          lambda N, L: [(j,) for j in range(2, L)], _num_iterative),
    Entry("pushforward-j", "natural", lambda S, j: S.sides_pushforward_J(j),
          lambda N, L: [(j,) for j in range(1, min(L, 4) + 1)]),
    Entry("pushforward-h", "natural", lambda S, k: S.sides_pushforward_h(k),
          lambda N, L: [(k,) for k in range(1, min(L, 3) + 1)]),
]}


def entry(identity: str, chart: str | None = None) -> Entry:
    try:
        e = ENTRIES[identity]
    except KeyError:
        raise KeyError(f"unknown identity {identity!r}") from None
    if chart is not None and chart != e.chart:
        raise ValueError(f"identity {identity!r} lives on the {e.chart} chart, not {chart}")
    return e


def _numeric_residual(e: Entry, S, indices, points):
    """Largest |lhs - rhs| / max(1, scale) over points via the pointwise evaluator.

    An evaluator may append a term-magnitude scale to a (label, lhs, rhs) triple;
    without one the residual is absolute.
    """
    worst, where = 0.0, ""
    for pt in points:
        x = _At(S.chart, pt)
        for label, lhs, rhs, *scale in e.numeric(S, x, *indices):
            d = np.abs(np.asarray(lhs, float) - np.asarray(rhs, float))
            if scale:
                d = d / np.maximum(1.0, scale[0])
            r = float(np.max(d)) if d.size else 0.0
            if not np.isfinite(r):
                return float("inf"), label
            if r > worst:
                worst, where = r, label
    return worst, where


def run(identity: str, N: int, indices: tuple = (), mode: str = "exact", samples: int = 100,
        tol: float = 1e-9, seed: int = 0, chart: str | None = None) -> IdentityReport:
    """Check one identity instance and return its report."""
    from .numerics import sample_points

    e = entry(identity, chart)
    S = system(e.chart, N)
    indices = tuple(indices)
    if mode == "exact":
        return run_exact(identity, e.anchor, e.chart, N, indices,
                         lambda: e.sides(S, *indices), e.multiplier)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    points = sample_points(e.chart, N, samples, seed)
    if e.numeric is None:
        return run_numeric(identity, e.anchor, e.chart, N, indices,
                           lambda: e.sides(S, *indices), points, tol, seed, e.multiplier)
    import time

    t0 = time.perf_counter()
    worst, where = _numeric_residual(e, S, indices, points)
    ok = worst < tol
    return IdentityReport(identity, e.anchor, e.chart, N, indices, "numeric",
                          "pass" if ok else "fail",
                          f"max residual = {worst:.3e}" + ("" if ok else f" at {where}"),
                          round((time.perf_counter() - t0) * 1000, 3), seed, e.multiplier, worst)


def instances(chart: str, N: int, level: int) -> list[tuple[str, tuple]]:
    out = []
    for e in ENTRIES.values():
        if e.chart == chart:
            out.extend((e.identity, idx) for idx in e.instances(N, level))
    return out


def _run_job(job):
    identity, N, indices, mode, samples, tol, seed = job
    return run(identity, N, indices, mode, samples, tol, seed)


def run_suite(charts, N: int, level: int, mode: str = "exact", samples: int = 100,
              tol: float = 1e-9, seed: int = 0, jobs: int = 1) -> list[IdentityReport]:
    """Every instance for the given charts; order-stable regardless of ``jobs``."""
    work = [(ident, N, idx, mode, samples, tol, seed)
            for c in charts for ident, idx in instances(c, N, level)]
    if jobs > 1 and len(work) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_job, work))
    else:
        reports = [_run_job(w) for w in work]
    return sort_reports(reports)
