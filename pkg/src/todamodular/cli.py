"""Command-line entry point: ``verify``, ``integrate`` and ``report``.

Exit codes: 0 everything passed, 1 a verification or integration failure,
2 a usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import catalog
from .reports import SCHEMA_VERSION, IdentityReport

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# exact mode gets expensive quickly past these
MAX_EXACT_N = 4
MAX_EXACT_LEVEL = 5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    N: int = 3
    level: int = 4
    chart: str = "both"
    mode: str = "exact"
    tol: float = 1e-9
    seed: int = 0
    samples: int = 100
    out: str | None = None
    format: str = "json"
    force: bool = False
    jobs: int = 1
    timings: bool = False

    def validate(self) -> None:
        if self.N < 2:
            raise ConfigError(f"N must be >= 2 (got {self.N})")
        if self.level < 1:
            raise ConfigError(f"level must be >= 1 (got {self.level})")
        if not self.tol > 0:
            raise ConfigError(f"tolerance must be > 0 (got {self.tol})")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.mode == "exact" and not self.force:
            if self.N > MAX_EXACT_N or self.level > MAX_EXACT_LEVEL:
                raise ConfigError(
                    f"exact mode is limited to N <= {MAX_EXACT_N}, level <= {MAX_EXACT_LEVEL}; "
                    "pass --force to go further (cost grows steeply with both)")

    @property
    def charts(self) -> tuple[str, ...]:
        return catalog.CHARTS if self.chart == "both" else (self.chart,)


# -- output helpers --------------------------------------------------------------

def report_records(reports: list[IdentityReport], timings: bool = False) -> list[dict]:
    return [{"schema": SCHEMA_VERSION, **r.to_dict(timings)} for r in reports]


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def format_reports(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    header = ["schema", "identity", "anchor", "chart", "n", "indices", "mode", "status",
              "witness", "seed", "multiplier", "residual", "elapsed_ms"]
    rows = [[r.get(k, "") if k != "indices" else " ".join(map(str, r["indices"])) for k in header]
            for r in records]
    return _csv_text(header, rows)


# -- presets and state files ------------------------------------------------------

def preset_state(name: str, N: int | None = None):
    from .numerics import RealState

    if name == "n2-symmetric":
        return RealState.flaschka([0.5], [0.0, 0.0])
    if name == "natural-rest":
        n = N or 3
        return RealState.natural(np.zeros(n), np.zeros(n))
    if name == "n8-spread":
        # spread spectrum: RK4 drift sits well above roundoff but below 1e-8 at dt = 1e-3
        return RealState.flaschka(np.full(7, 1.5), np.linspace(-2.0, 2.0, 8))
    raise ConfigError(f"unknown preset {name!r} (known: {', '.join(PRESETS)})")


PRESETS = ("n2-symmetric", "natural-rest", "n8-spread")


def load_state(path: str):
    """JSON state: {"chart": ..., "a": [...], "b": [...]} or {"q": [...], "p": [...]}."""
    from .numerics import RealState

    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"state file not found: {path}")
    try:
        d = json.loads(p.read_text())
        chart = d.get("chart", "flaschka" if "a" in d else "natural")
        t = float(d.get("time", 0.0))
        if "coords" in d:
            return RealState(chart, d["coords"], t)
        if chart == "flaschka":
            return RealState.flaschka(d["a"], d["b"], t)
        return RealState.natural(d["q"], d["p"], t)
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed state file {path}: {exc}") from None


# -- commands ---------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    cfg.validate()
    reports = catalog.run_suite(cfg.charts, cfg.N, cfg.level, cfg.mode, cfg.samples,
                                cfg.tol, cfg.seed, cfg.jobs)
    _emit(format_reports(report_records(reports, cfg.timings), cfg.format), cfg.out)
    failed = [r for r in reports if not r.passed]
    summary = f"{len(reports) - len(failed)}/{len(reports)} checks passed"
    print(summary, file=sys.stderr if cfg.out is None else sys.stdout)
    for r in failed:
        print(r.line(), file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_integrate(args) -> int:
    from .numerics import IntegrationError, integrate

    if not args.dt > 0 or not args.t_end > 0:
        raise ConfigError("dt and t-end must be positive")
    if args.record_every < 1:
        raise ConfigError("record-every must be >= 1")
    if args.state_file and args.preset:
        raise ConfigError("give either --preset or --state-file, not both")
    if args.state_file:
        state = load_state(args.state_file)
    else:
        state = preset_state(args.preset or "n2-symmetric", args.n)
    steps = int(round(args.t_end / args.dt))
    code = EXIT_OK
    try:
        traj = integrate(state, args.dt, steps, record_every=args.record_every)
    except IntegrationError as exc:
        print(f"integration aborted: {exc}", file=sys.stderr)
        traj, code = exc.partial, EXIT_FAIL
    summary = {"schema": SCHEMA_VERSION, **traj.summary()}
    if args.out:
        if args.format == "csv":
            text = _csv_text(traj.columns(), [[repr(float(v)) for v in row] for row in traj.table()])
        else:
            text = json.dumps({"schema": SCHEMA_VERSION, "summary": traj.summary(),
                               "columns": traj.columns(), "rows": traj.table().tolist()}) + "\n"
        Path(args.out).write_text(text)
    print(json.dumps(summary, indent=2))
    return code


def _load_reports(paths: list[str]) -> list[IdentityReport]:
    out = []
    for path in paths:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from None
        if not isinstance(data, list):
            raise ConfigError(f"{path}: expected a JSON array of reports")
        for rec in data:
            if not isinstance(rec, dict) or rec.get("schema") != SCHEMA_VERSION or "identity" not in rec:
                raise ConfigError(f"{path}: not a schema-{SCHEMA_VERSION} report record")
            try:
                out.append(IdentityReport.from_dict(rec))
            except TypeError as exc:
                raise ConfigError(f"{path}: bad record: {exc}") from None
    return out


def cmd_report(paths: list[str]) -> int:
    reports = _load_reports(paths)
    rows = [("identity", "chart", "N", "indices", "mode", "status", "witness")]
    for r in sorted(reports, key=IdentityReport.sort_key):
        rows.append((r.identity, r.chart, str(r.n), ",".join(map(str, r.indices)) or "-",
                     r.mode, r.status.upper(), "" if r.passed else r.witness))
    widths = [max(len(row[k]) for row in rows) for k in range(6)]
    for row in rows:
        print("  ".join(c.ljust(w) for c, w in zip(row[:6], widths)) + ("  " + row[6] if row[6] else ""))
    failed = sum(not r.passed for r in reports)
    if failed:
        print(f"{failed} FAILED of {len(reports)} checks")
        return EXIT_FAIL
    print(f"ALL PASS ({len(reports)} checks)")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="todamodular",
                                description="Exact and numeric checks for the Toda modular hierarchy.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity catalog")
    v.add_argument("--chart", choices=("flaschka", "natural", "both"), default="both")
    v.add_argument("--n", type=int, default=3, help="lattice size N (>= 2)")
    v.add_argument("--level", type=int, default=4, help="highest hierarchy index")
    v.add_argument("--mode", choices=("exact", "numeric"), default="exact")
    v.add_argument("--tol", type=float, default=1e-9, help="numeric tolerance")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=100, help="random states per numeric check")
    v.add_argument("--out", help="report path (default: stdout)")
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.add_argument("--force", action="store_true", help="lift the exact-mode size limits")
    v.add_argument("--jobs", type=int, default=1, help="worker processes")
    v.add_argument("--timings", action="store_true", help="include elapsed_ms in records")

    g = sub.add_parser("integrate", help="integrate a Toda flow with RK4")
    g.add_argument("--preset", choices=PRESETS)
    g.add_argument("--state-file")
    g.add_argument("--n", type=int, help="size for the natural-rest preset")
    g.add_argument("--dt", type=float, default=1e-3)
    g.add_argument("--t-end", type=float, default=10.0)
    g.add_argument("--record-every", type=int, default=10)
    g.add_argument("--out", help="trajectory path")
    g.add_argument("--format", choices=("json", "csv"), default="csv")

    r = sub.add_parser("report", help="summarize report files")
    r.add_argument("files", nargs="+")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            cfg = RunConfig(args.n, args.level, args.chart, args.mode, args.tol, args.seed,
                            args.samples, args.out, args.format, args.force, args.jobs, args.timings)
            return cmd_verify(cfg)
        if args.command == "integrate":
            return cmd_integrate(args)
        return cmd_report(args.files)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
