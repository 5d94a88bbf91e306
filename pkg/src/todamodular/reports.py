"""Identity reports and the residual machinery shared by every verifier.

A verifier produces *sides*: ``(label, lhs, rhs)`` triples whose members are
Polys or tensors on one chart.  Exact mode subtracts and tests for the zero
polynomial; numeric mode evaluates both members at sample points.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .exactalg import Poly, evaluate_at, generator_values
from .tensor import PolyBivector, PolyMatrix, PolyTrivector, PolyVectorField

SCHEMA_VERSION = 1


@dataclass
class IdentityReport:
    identity: str
    anchor: str
    chart: str
    n: int
    indices: tuple = ()
    mode: str = "exact"
    status: str = "pass"
    witness: str = "0"
    elapsed_ms: float = 0.0
    seed: int | None = None
    multiplier: str | None = None
    residual: float | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def sort_key(self):
        return (self.identity, self.chart, self.n, tuple(self.indices))

    def to_dict(self, timings: bool = False) -> dict:
        d = asdict(self)
        d["indices"] = list(self.indices)
        if not timings:
            d.pop("elapsed_ms")
        if self.mode == "exact":
            d.pop("seed")
            d.pop("residual")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IdentityReport":
        d = dict(d)
        d["indices"] = tuple(d.get("indices", ()))
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})

    def line(self) -> str:
        idx = ",".join(map(str, self.indices))
        return f"[{self.status.upper()}] {self.identity}({idx}) {self.chart} N={self.n}: {self.witness}"


def components(obj) -> list[tuple[str, Poly]]:
    """Flatten a Poly or tensor into labelled scalar components."""
    if isinstance(obj, Poly):
        return [("", obj)]
    if isinstance(obj, PolyVectorField):
        names = obj.chart.coordinates
        return [(names[i], c) for i, c in enumerate(obj.components)]
    if isinstance(obj, PolyBivector):
        names = obj.chart.coordinates
        n = obj.chart.dim
        return [(f"{names[i]},{names[j]}", obj.entry(i, j)) for i in range(n) for j in range(i + 1, n)]
    if isinstance(obj, PolyTrivector):
        names = obj.chart.coordinates
        n = obj.chart.dim
        return [(f"{names[i]},{names[j]},{names[k]}", obj.entry(i, j, k))
                for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)]
    if isinstance(obj, PolyMatrix):
        r, c = obj.shape
        return [(f"{i},{j}", obj[i, j]) for i in range(r) for j in range(c)]
    raise TypeError(f"cannot flatten {type(obj).__name__}")


def _difference(lhs, rhs):
    if rhs is None:
        return lhs
    if isinstance(lhs, (Poly, PolyVectorField, PolyBivector, PolyTrivector, PolyMatrix)):
        return lhs - rhs
    raise TypeError(type(lhs))


def exact_witness(sides) -> str | None:
    """None when every side agrees exactly, else 'label[component]: residual'."""
    for label, lhs, rhs in sides:
        for comp, r in components(_difference(lhs, rhs)):
            if not r.is_zero():
                where = f"{label}[{comp}]" if comp else label
                return f"{where}: {r.to_text()}"
    return None


def numeric_residual(sides, points: Sequence[dict]) -> tuple[float, str]:
    """Largest componentwise |lhs - rhs| over the sample points."""
    worst, where = 0.0, ""
    for label, lhs, rhs in sides:
        lc = components(lhs)
        rc = components(rhs) if rhs is not None else [(c, None) for c, _ in lc]
        chart = lc[0][1].chart
        for pt in points:
            vals = generator_values(chart, pt)
            for (comp, l), (_, r) in zip(lc, rc):
                x = evaluate_at(l, vals) - (evaluate_at(r, vals) if r is not None else 0.0)
                if not np.isfinite(x) or abs(x) > worst:
                    worst = abs(x) if np.isfinite(x) else float("inf")
                    where = f"{label}[{comp}]" if comp else label
    return worst, where


def run_exact(identity: str, anchor: str, chart: str, n: int, indices: tuple,
              build: Callable[[], list], multiplier: str | None = None) -> IdentityReport:
    t0 = time.perf_counter()
    w = exact_witness(build())
    return IdentityReport(identity, anchor, chart, n, tuple(indices), "exact",
                          "pass" if w is None else "fail", "0" if w is None else w,
                          round((time.perf_counter() - t0) * 1000, 3), None, multiplier)


def run_numeric(identity: str, anchor: str, chart: str, n: int, indices: tuple,
                build: Callable[[], list], points: Sequence[dict], tol: float, seed: int | None,
                multiplier: str | None = None) -> IdentityReport:
    t0 = time.perf_counter()
    worst, where = numeric_residual(build(), points)
    ok = worst < tol
    witness = f"max |residual| = {worst:.3e}" + ("" if ok else f" at {where}")
    return IdentityReport(identity, anchor, chart, n, tuple(indices), "numeric",
                          "pass" if ok else "fail", witness,
                          round((time.perf_counter() - t0) * 1000, 3), seed, multiplier, worst)


def sort_reports(reports: Iterable[IdentityReport]) -> list[IdentityReport]:
    return sorted(reports, key=IdentityReport.sort_key)
