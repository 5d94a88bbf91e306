"""Floating-point layer: Toda flows, Sturm bisection, pointwise identity checks."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_good_time: float, partial=None):
        super().__init__(f"{message} (last good time {last_good_time:g})")
        self.last_good_time = last_good_time
        self.partial = partial


class DegenerateSpectrumWarning(UserWarning):
    pass


@dataclass
class RealState:
    chart: str  # "flaschka" or "natural"
    coords: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        if self.chart not in ("flaschka", "natural"):
            raise ValueError(f"unknown chart {self.chart!r}")
        if self.chart == "flaschka":
            if len(self.coords) % 2 != 1 or len(self.coords) < 3:
                raise ValueError("a Flaschka state has 2N-1 coordinates, N >= 2")
        elif len(self.coords) % 2 or len(self.coords) < 4:
            raise ValueError("a natural state has 2N coordinates, N >= 2")

    @property
    def N(self) -> int:
        return (len(self.coords) + 1) // 2 if self.chart == "flaschka" else len(self.coords) // 2

    @classmethod
    def flaschka(cls, a, b, time: float = 0.0) -> "RealState":
        return cls("flaschka", np.concatenate([np.asarray(a, float), np.asarray(b, float)]), time)

    @classmethod
    def natural(cls, q, p, time: float = 0.0) -> "RealState":
        return cls("natural", np.concatenate([np.asarray(q, float), np.asarray(p, float)]), time)

    def split(self) -> tuple[np.ndarray, np.ndarray]:
        N = self.N
        if self.chart == "flaschka":
            return self.coords[:N - 1], self.coords[N - 1:]
        return self.coords[:N], self.coords[N:]

    def lax_entries(self) -> tuple[np.ndarray, np.ndarray]:
        """(diagonal b, off-diagonal a) of the Jacobi matrix at this state."""
        if self.chart == "flaschka":
            a, b = self.split()
            return b, a
        q, p = self.split()
        return -0.5 * p, 0.5 * np.exp(0.5 * (q[:-1] - q[1:]))

    def assignment(self) -> dict[str, float]:
        N = self.N
        x, y = self.split()
        if self.chart == "flaschka":
            d = {f"a{i + 1}": float(v) for i, v in enumerate(x)}
            d.update({f"b{i + 1}": float(v) for i, v in enumerate(y)})
        else:
            d = {f"q{i + 1}": float(v) for i, v in enumerate(x)}
            d.update({f"p{i + 1}": float(v) for i, v in enumerate(y)})
        return d


@dataclass
class SpectralRecord:
    eigenvalues: np.ndarray
    time: float


def toda_rhs(state: RealState) -> np.ndarray:
    if state.chart == "flaschka":
        a, b = state.split()
        ap = np.concatenate([[0.0], a, [0.0]])  # a_0 = a_N = 0
        da = a * (b[1:] - b[:-1])
        db = 2.0 * (ap[1:] ** 2 - ap[:-1] ** 2)
        return np.concatenate([da, db])
    q, p = state.split()
    w = np.exp(q[:-1] - q[1:])
    force = np.zeros_like(p)
    force[1:] += w
    force[:-1] -= w
    return np.concatenate([p, force])


_TINY = np.finfo(float).tiny * 1e10


def _sturm_count(diag: np.ndarray, off2: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below each shift.

    ``diag`` is (..., n), ``off2`` the squared off-diagonal (..., n-1) and ``x``
    holds shifts (..., m); leading axes broadcast.
    """
    d = diag[..., :1] - x
    d = np.where(d == 0.0, -_TINY, d)
    count = (d < 0).astype(int)
    for i in range(1, diag.shape[-1]):
        d = diag[..., i:i + 1] - x - off2[..., i - 1:i] / d
        d = np.where(d == 0.0, -_TINY, d)
        count += d < 0
    return count


def tridiagonal_eigenvalues(diag, offdiag, tol: float = 1e-12) -> np.ndarray:
    """Ascending eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.

    Accepts stacked inputs of shape (..., n) and (..., n-1).  ``tol=0``
    bisects until the interval can no longer be split in floating point.
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    n = diag.shape[-1]
    if offdiag.shape[-1] != n - 1 or offdiag.shape[:-1] != diag.shape[:-1]:
        raise ValueError("offdiag must have length len(diag) - 1")
    if n == 1:
        return diag.copy()
    zero = np.zeros(diag.shape[:-1] + (1,))
    r = (np.abs(np.concatenate([zero, offdiag], axis=-1))
         + np.abs(np.concatenate([offdiag, zero], axis=-1)))
    lo0 = np.min(diag - r, axis=-1, keepdims=True)
    hi0 = np.max(diag + r, axis=-1, keepdims=True)
    pad = 1e-9 * np.maximum(1.0, np.maximum(np.abs(lo0), np.abs(hi0)))
    lo = np.broadcast_to(lo0 - pad, diag.shape).copy()
    hi = np.broadcast_to(hi0 + pad, diag.shape).copy()
    k = np.arange(n)
    off2 = offdiag ** 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        done = (hi - lo <= tol) | (mid <= lo) | (mid >= hi)
        if done.all():
            break
        go_left = _sturm_count(diag, off2, mid) >= k + 1
        hi = np.where(~done & go_left, mid, hi)
        lo = np.where(~done & ~go_left, mid, lo)
    return 0.5 * (lo + hi)


def invariants(diag: np.ndarray, offdiag: np.ndarray, kmax: int) -> np.ndarray:
    """H_k = tr(L^k)/k for k = 1..kmax from explicit matrix powers (stackable)."""
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    n = diag.shape[-1]
    L = np.zeros(diag.shape + (n,))
    i = np.arange(n)
    L[..., i, i] = diag
    L[..., i[:-1], i[1:]] = offdiag
    L[..., i[1:], i[:-1]] = offdiag
    out = np.empty(diag.shape[:-1] + (kmax,))
    P = L
    for k in range(1, kmax + 1):
        out[..., k - 1] = np.trace(P, axis1=-2, axis2=-1) / k
        P = P @ L
    return out


@dataclass
class Trajectory:
    chart: str
    N: int
    times: np.ndarray
    states: np.ndarray
    spectra: np.ndarray
    invariants: np.ndarray
    dt: float
    aborted: str | None = None

    def spectral_records(self) -> list[SpectralRecord]:
        return [SpectralRecord(s, float(t)) for s, t in zip(self.spectra, self.times)]

    def eigenvalue_drift(self) -> float:
        return float(np.max(np.abs(self.spectra - self.spectra[0])))

    def invariant_drift(self) -> np.ndarray:
        return np.max(np.abs(self.invariants - self.invariants[0]), axis=0)

    def summary(self) -> dict:
        return {
            "chart": self.chart,
            "N": self.N,
            "dt": self.dt,
            "t_end": float(self.times[-1]),
            "samples": int(len(self.times)),
            "max_eigenvalue_drift": self.eigenvalue_drift(),
            "max_invariant_drift": {f"H{k + 1}": float(v) for k, v in enumerate(self.invariant_drift())},
            "aborted": self.aborted,
        }

    def columns(self) -> list[str]:
        N = self.N
        if self.chart == "flaschka":
            coords = [f"a{i}" for i in range(1, N)] + [f"b{i}" for i in range(1, N + 1)]
        else:
            coords = [f"q{i}" for i in range(1, N + 1)] + [f"p{i}" for i in range(1, N + 1)]
        return (["t"] + coords + [f"lambda{i}" for i in range(1, N + 1)]
                + [f"H{k}" for k in range(1, N + 1)])

    def table(self) -> np.ndarray:
        return np.column_stack([self.times, self.states, self.spectra, self.invariants])


def _lax_batch(chart: str, N: int, X: np.ndarray):
    if chart == "flaschka":
        return X[:, N - 1:], X[:, :N - 1]
    q, p = X[:, :N], X[:, N:]
    return -0.5 * p, 0.5 * np.exp(0.5 * (q[:, :-1] - q[:, 1:]))


def _rhs_function(chart: str, N: int):
    if chart == "flaschka":
        def f(x):
            a, b = x[:N - 1], x[N - 1:]
            a2 = np.zeros(N + 1)
            a2[1:N] = a * a
            return np.concatenate([a * (b[1:] - b[:-1]), 2.0 * (a2[1:] - a2[:-1])])
    else:
        def f(x):
            q, p = x[:N], x[N:]
            w = np.exp(q[:-1] - q[1:])
            force = np.zeros(N)
            force[1:] += w
            force[:-1] -= w
            return np.concatenate([p, force])
    return f


def _trajectory(chart, N, times, states, dt, aborted=None) -> Trajectory:
    X = np.array(states)
    d, o = _lax_batch(chart, N, X)
    lam = tridiagonal_eigenvalues(d, o, tol=0.0)
    return Trajectory(chart, N, np.array(times), X, lam, invariants(d, o, N), dt, aborted)


def integrate(state: RealState, dt: float, steps: int, method: str = "rk4",
              record_every: int = 1) -> Trajectory:
    """Classical fixed-step RK4, sampling the spectrum and H_1..H_N."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if method != "rk4":
        raise ValueError(f"unsupported method {method!r}")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    chart, N = state.chart, state.N
    f = _rhs_function(chart, N)
    x = state.coords.copy()
    t = state.time
    times, states = [t], [x.copy()]
    for n in range(1, steps + 1):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        xn = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(xn)):
            aborted = f"non-finite state at step {n}"
            raise IntegrationError(aborted, t, _trajectory(chart, N, times, states, dt, aborted))
        x = xn
        t = state.time + n * dt
        if n % record_every == 0 or n == steps:
            times.append(t)
            states.append(x.copy())
    return _trajectory(chart, N, times, states, dt)


def random_flaschka_state(rng: np.random.Generator, N: int, a_range=(0.1, 2.0),
                          b_range=(-2.0, 2.0)) -> RealState:
    return RealState.flaschka(rng.uniform(*a_range, N - 1), rng.uniform(*b_range, N))


def random_natural_state(rng: np.random.Generator, N: int, bound: float = 2.0) -> RealState:
    return RealState.natural(rng.uniform(-bound, bound, N), rng.uniform(-bound, bound, N))


def eigenvector_gradients(state: RealState, gap: float = 1e-8):
    """Eigenpairs (lambda, U^lambda) of L with U = (2 v_i v_{i+1}, v_i^2).

    Eigenvectors have unit norm and a positive first nonzero component.
    """
    d, o = state.lax_entries()
    L = np.diag(d) + np.diag(o, 1) + np.diag(o, -1)
    lam, V = np.linalg.eigh(L)
    if len(lam) > 1 and np.min(np.diff(lam)) < gap:
        warnings.warn("eigenvalue multiplicity within tolerance; resample the state",
                      DegenerateSpectrumWarning)
    out = []
    for k in range(len(lam)):
        v = V[:, k]
        first = np.flatnonzero(np.abs(v) > 1e-300)[0]
        if v[first] < 0:
            v = -v
        U = np.concatenate([2 * v[:-1] * v[1:], v ** 2])
        out.append((float(lam[k]), U))
    return out


def eigen_gradient_check(system, state: RealState, j: int) -> float:
    """max over eigenpairs of |pi_j U - lambda pi_{j-1} U|_inf at ``state``."""
    if state.chart != "flaschka":
        raise ValueError("eigenvector gradients are taken in Flaschka coordinates")
    if j < 2:
        raise ValueError("needs j >= 2")
    x = state.assignment()
    Pj = system.pi(j).evaluate(x)
    Pm = system.pi(j - 1).evaluate(x)
    worst = 0.0
    for lam, U in eigenvector_gradients(state):
        r = Pj @ U - lam * (Pm @ U)
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


def sample_points(chart: str, N: int, samples: int, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    if chart == "flaschka":
        return [random_flaschka_state(rng, N).assignment() for _ in range(samples)]
    return [random_natural_state(rng, N).assignment() for _ in range(samples)]


def spot_check(identity: str, N: int, samples: int = 100, tolerance: float = 1e-9,
               indices: tuple = (), seed: int = 0, chart: str | None = None):
    """Evaluate both sides of a catalogued identity at seeded random states."""
    from . import catalog

    return catalog.run(identity, N, tuple(indices), mode="numeric", samples=samples,
                       tol=tolerance, seed=seed, chart=chart)


def detR_scaling_numeric(natural_system, state: RealState) -> float:
    """det R divided by prod(lambda_i^2) at a natural-chart state (float oracle)."""
    x = state.assignment()
    from .exactalg import evaluate_at, generator_values

    R = natural_system.recursion_operator()
    vals = generator_values(natural_system.chart, x)
    M = np.array([[evaluate_at(R[i, j], vals) for j in range(R.shape[1])] for i in range(R.shape[0])])
    d, o = state.lax_entries()
    lam = tridiagonal_eigenvalues(d, o)
    return float(np.linalg.det(M) / np.prod(lam ** 2))
