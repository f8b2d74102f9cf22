"""Scenario runner: executes configured checks, writes a CSV report and a
text summary, optionally emits convergence tables, and signals pass/fail
through the exit code (0 all pass, 1 failures, 2 configuration error)."""

from __future__ import annotations

import argparse
import csv
import fnmatch
import os
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .expressions import compile_scalar, compile_vector
from .fields import ScalarTestFunction, bump
from .quadrature import QuadratureSpec
from .scenario import CheckSpec, ConfigError, Scenario, load_scenario
from .symtensor import frobenius
from .sweeps import (
    beta_inclusion_sweep,
    cone_separation_sweep,
    reparametrized_lipschitz_sweep,
    sym_inequality_sweep,
)
from .trace import NonConvergedError, averaged_trace, default_delta, trace_field
from .verify import (
    CheckReport,
    collar_estimate_check,
    directional_ibp_residual,
    field_scale,
    ibp_residual,
    jump_reconstruction_check,
    strict_convergence_experiment,
    trace_norm_bound,
)

__all__ = ["main", "run_scenario"]


@dataclass
class ResultRow:
    scenario: str
    check: str
    residual: float
    tolerance: float
    passed: bool
    wall_ms: float
    table: list = dc_field(default_factory=list)


class ScenarioContext:
    """Per-scenario caches shared between checks (trace fields are costly)."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._traces: dict = {}
        self._lock = threading.Lock()

    def traces(self, spec: QuadratureSpec):
        key = (spec.order, spec.cells_per_axis)
        with self._lock:
            if key not in self._traces:
                self._traces[key] = trace_field(self.scenario.field,
                                                self.scenario.domain, spec)
            return self._traces[key]


def _default_phis(dim: int) -> list[ScalarTestFunction]:
    def const(p):
        return np.ones(p.shape[:-1])

    def const_grad(p):
        return np.zeros_like(p)

    def poly(p):
        return p[..., 0] * p[..., 1] + 0.5 * p[..., 0] ** 2

    def poly_grad(p):
        g = np.zeros_like(p)
        g[..., 0] = p[..., 1] + p[..., 0]
        g[..., 1] = p[..., 0]
        return g

    def trig(p):
        return np.sin(p[..., 0] + 2.0 * p[..., 1])

    def trig_grad(p):
        c = np.cos(p[..., 0] + 2.0 * p[..., 1])
        g = np.zeros_like(p)
        g[..., 0] = c
        g[..., 1] = 2.0 * c
        return g

    return [ScalarTestFunction(const, const_grad, "const"),
            ScalarTestFunction(poly, poly_grad, "poly"),
            ScalarTestFunction(trig, trig_grad, "trig")]


def _phis_from_params(params: dict, dim: int) -> list[ScalarTestFunction]:
    if "phi" not in params:
        return _default_phis(dim)
    out = []
    for k, tab in enumerate(params["phi"]):
        f = compile_scalar(tab["f"])
        g = compile_vector(tab["grad"])
        out.append(ScalarTestFunction(f, g, tab.get("name", f"phi{k}")))
    return out


def _chart_by_name(scn: Scenario, name: str):
    for ch in scn.domain.charts:
        if ch.name == name:
            return ch
    raise ConfigError(f"scenario {scn.name!r}: no chart named {name!r}")


def _tilted(chart, delta=None):
    d = default_delta(chart) if delta is None else delta
    xi = np.zeros(chart.dim)
    xi[-1] = 1.0
    xi[0] += d
    return xi / np.linalg.norm(xi)


# ----------------------------------------------------------------------------
# Check runners: each returns a list of (row-name, CheckReport-like) pairs.


def _run_sym_inequality(ctx: ScenarioContext, chk: CheckSpec, rng):
    pairs = int(chk.params.get("pairs", 10000))
    worst = sym_inequality_sweep(rng, ctx.scenario.dim, pairs, slack=chk.tolerance)
    return [("sym-inequality", worst, chk.tolerance, [])]


def _run_cone_geometry(ctx: ScenarioContext, chk: CheckSpec, rng):
    lipschitz = chk.params.get("lipschitz", [0.25, 0.5, 1.0, 2.0])
    graphs = int(chk.params.get("graphs", 5))
    samples = int(chk.params.get("samples", 250))
    sep_gap = min(cone_separation_sweep(rng, L, graphs, samples, ctx.scenario.dim)
                  for L in lipschitz)
    beta_frac = max(beta_inclusion_sweep(rng, L, samples, ctx.scenario.dim)
                    for L in lipschitz)
    lip_excess = max(reparametrized_lipschitz_sweep(rng, L, dim=ctx.scenario.dim)
                     for L in lipschitz)
    # sweeps already fold their slack in; a row passes only when clean
    return [
        ("cone-separation", max(0.0, chk.tolerance - sep_gap), 0.0, []),
        ("cone-beta-inclusion", beta_frac, 0.0, []),
        ("cone-reparametrized-lipschitz", lip_excess, 0.0, []),
    ]


def _run_trace_restriction(ctx: ScenarioContext, chk: CheckSpec, rng):
    scn = ctx.scenario
    traces = ctx.traces(scn.quadrature)
    worst = 0.0
    for tf in traces:
        vals = scn.field._eval(tf.points)
        worst = max(worst, float(np.max(np.linalg.norm(tf.gamma_world - vals, axis=1))))
    return [("trace-restriction", worst, chk.tolerance, [])]


def _run_ibp(ctx: ScenarioContext, chk: CheckSpec, rng):
    scn = ctx.scenario
    scale = field_scale(scn.field, scn.domain)
    rows = []
    for phi in _phis_from_params(chk.params, scn.dim):
        base = frobenius(ibp_residual(scn.field, scn.domain, phi, scn.quadrature,
                                      ctx.traces(scn.quadrature))) / scale
        fine_spec = scn.quadrature.refined()
        fine = frobenius(ibp_residual(scn.field, scn.domain, phi, fine_spec,
                                      ctx.traces(fine_spec))) / scale
        grown = fine > base + 1e-10
        residual = float("inf") if grown else max(base, fine)
        table = [{"h": 1.0 / scn.quadrature.cells_per_axis, "residual": base},
                 {"h": 1.0 / fine_spec.cells_per_axis, "residual": fine}]
        rows.append((f"ibp[{phi.name}]", residual, chk.tolerance, table))
    return rows


def _run_directional_ibp(ctx: ScenarioContext, chk: CheckSpec, rng):
    scn = ctx.scenario
    chart = _chart_by_name(scn, chk.params.get("chart", "top"))
    scale = field_scale(scn.field, scn.domain)
    center = chk.params.get("center")
    if center is None:
        lo, hi = chart.window[0]
        mid = 0.5 * (lo + hi)
        center = chart.surface_point(np.array([[mid]]))[0]
    radius = float(chk.params.get("radius", 0.2))
    depth = float(chk.params.get("depth", 0.25))
    phi = bump(center, radius)
    en = np.zeros(chart.dim)
    en[-1] = 1.0
    xi1 = _tilted(chart)
    rows = []
    res = {}
    for label, xi in (("en", en), ("xi1", xi1)):
        r = directional_ibp_residual(scn.field, scn.domain, chart, phi, xi,
                                     scn.quadrature, depth=depth)
        res[label] = r
        rows.append((f"directional-ibp[{label}]", abs(r) / scale, chk.tolerance, []))
    r_asm = directional_ibp_residual(scn.field, scn.domain, chart, phi, xi1,
                                     scn.quadrature, depth=depth, use_assembled=True)
    rows.append(("directional-ibp[linearity]", abs(r_asm - res["xi1"]) / scale,
                 2.0 * chk.tolerance, []))
    return rows


def _run_collar(ctx: ScenarioContext, chk: CheckSpec, rng):
    scn = ctx.scenario
    chart = _chart_by_name(scn, chk.params.get("chart", "top"))
    en = np.zeros(chart.dim)
    en[-1] = 1.0
    rows = []
    for label, xi in (("en", en), ("xi1", _tilted(chart))):
        rep = collar_estimate_check(scn.field, scn.domain, chart, xi, scn.quadrature,
                                    slack=chk.tolerance)
        table = [{"h": r["epsilon"], "lhs": r["lhs"], "rhs": r["rhs"]}
                 for r in rep.details["rows"]]
        rows.append((f"collar[{label}]", rep.residual, rep.tolerance, table))
    return rows


def _run_trace_norm(ctx: ScenarioContext, chk: CheckSpec, rng):
    rep = trace_norm_bound(ctx.scenario.field, ctx.scenario.domain, ctx.scenario.quadrature)
    return [("trace-norm", rep.residual, rep.tolerance, [])]


def _run_strict(ctx: ScenarioContext, chk: CheckSpec, rng):
    scn = ctx.scenario
    radii = [float(r) for r in chk.params.get("radii", [0.08, 0.04, 0.02, 0.01])]
    rep = strict_convergence_experiment(scn.field, scn.domain, radii, scn.quadrature,
                                        tol=chk.tolerance,
                                        traces=ctx.traces(scn.quadrature))
    table = [{"h": r["radius"], "l1": r["l1"], "tv_gap": r["tv_gap"],
              "trace_gap": r["trace_gap"]} for r in rep.details["rows"]]
    return [("strict-convergence", rep.residual, rep.tolerance, table)]


def _run_jump_reconstruction(ctx: ScenarioContext, chk: CheckSpec, rng):
    scn = ctx.scenario
    if not scn.interfaces:
        raise ConfigError(f"scenario {scn.name!r}: jump-reconstruction needs an interface")
    iface = next(iter(scn.interfaces.values()))
    center = chk.params.get("center", [0.5, 0.45])
    radius = float(chk.params.get("radius", 0.3))
    phi = bump(np.asarray(center, dtype=float), radius)
    rep = jump_reconstruction_check(scn.field, iface, phi, scn.domain, scn.quadrature,
                                    tol=chk.tolerance)
    return [("jump-reconstruction", rep.residual, rep.tolerance, [])]


def _run_averaged_agreement(ctx: ScenarioContext, chk: CheckSpec, rng):
    scn = ctx.scenario
    traces = ctx.traces(scn.quadrature)
    count = int(chk.params.get("nodes", 10))
    margin = float(chk.params.get("interface_margin", 0.05))
    candidates = []
    for tf in traces:
        for k in range(tf.points.shape[0]):
            pt = tf.points[k]
            if scn.field.interface is not None:
                d = min(abs(float(p.signed_offset(pt))) for p in scn.field.interface.pieces)
                if d < margin:
                    continue
            candidates.append((tf, k))
    idx = rng.choice(len(candidates), size=min(count, len(candidates)), replace=False)
    worst = 0.0
    for i in sorted(int(j) for j in idx):
        tf, k = candidates[i]
        est = averaged_trace(scn.field, scn.domain, tf.points[k], chart=tf.chart)
        worst = max(worst, float(np.linalg.norm(est.vector() - tf.gamma_world[k])))
    return [("averaged-agreement", worst, chk.tolerance, [])]


_RUNNERS = {
    "sym-inequality": _run_sym_inequality,
    "cone-geometry": _run_cone_geometry,
    "trace-restriction": _run_trace_restriction,
    "ibp": _run_ibp,
    "directional-ibp": _run_directional_ibp,
    "collar": _run_collar,
    "trace-norm": _run_trace_norm,
    "strict-convergence": _run_strict,
    "jump-reconstruction": _run_jump_reconstruction,
    "averaged-agreement": _run_averaged_agreement,
}


def run_scenario(scn: Scenario, tol_scale: float = 1.0, seed_override: int | None = None,
                 jobs: int = 1, name_filter: str | None = None) -> list[ResultRow]:
    """Execute one scenario's checks (optionally in a worker pool)."""
    ctx = ScenarioContext(scn)
    seed = scn.seed if seed_override is None else seed_override

    def job(item):
        idx, chk = item
        rng = np.random.default_rng([seed, idx])
        t0 = time.perf_counter()
        try:
            produced = _RUNNERS[chk.kind](ctx, chk, rng)
        except NonConvergedError as exc:
            produced = [(chk.kind + "[non-converged]", float("inf"), chk.tolerance, [])]
        wall = (time.perf_counter() - t0) * 1000.0
        rows = []
        for name, residual, tol, table in produced:
            tol = tol * tol_scale
            rows.append(ResultRow(scn.name, name, float(residual), float(tol),
                                  bool(residual <= tol), wall / max(1, len(produced)), table))
        return rows

    items = list(enumerate(scn.checks))
    if name_filter:
        items = [it for it in items
                 if fnmatch.fnmatch(f"{scn.name}/{it[1].kind}", name_filter)
                 or fnmatch.fnmatch(scn.name, name_filter)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(job, items))
    else:
        chunks = [job(it) for it in items]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.scenario, r.check))
    return rows


def _format_float(x: float) -> str:
    if x != x:
        return "nan"
    if x == float("inf"):
        return "inf"
    return repr(float(x))


def write_report(rows: list[ResultRow], out_dir: Path, timings: bool, tables: bool):
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario", "check", "residual", "tolerance", "pass", "wall_time_ms"])
        for r in rows:
            writer.writerow([r.scenario, r.check, _format_float(r.residual),
                             _format_float(r.tolerance), "true" if r.passed else "false",
                             str(int(r.wall_ms)) if timings else "0"])
    with open(out_dir / "summary.txt", "w") as fh:
        fh.write(f"{'scenario':24} {'check':34} {'residual':>13} {'tolerance':>10} pass\n")
        for r in rows:
            fh.write(f"{r.scenario:24} {r.check:34} {r.residual:13.4e} "
                     f"{r.tolerance:10.1e} {'pass' if r.passed else 'FAIL'}"
                     f"{f'  [{r.wall_ms:.0f} ms]' if timings else ''}\n")
        n_fail = sum(1 for r in rows if not r.passed)
        fh.write(f"\n{len(rows)} checks, {n_fail} failures\n")
    if tables:
        tdir = out_dir / "tables"
        tdir.mkdir(exist_ok=True)
        for r in rows:
            if not r.table:
                continue
            keys = list(r.table[0].keys())
            fname = f"{r.scenario}__{r.check}".replace("/", "-").replace("[", "_").replace("]", "")
            with open(tdir / (fname + ".csv"), "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(keys)
                for row in sorted(r.table, key=lambda d: -d.get("h", 0.0)):
                    writer.writerow([_format_float(row[k]) if isinstance(row[k], float)
                                     else row[k] for k in keys])
    return csv_path


def _collect_configs(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        found = sorted(p.glob("*.toml"))
        if not found:
            raise ConfigError(f"no .toml scenario files in directory {p}")
        return found
    return [p]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bdtrace",
        description="Run boundary-trace verification scenarios and report residuals.")
    parser.add_argument("--config", required=True,
                        help="scenario .toml file or a directory of them")
    parser.add_argument("--out", default="bdtrace-out", help="output directory")
    parser.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply every check tolerance by this factor")
    parser.add_argument("--jobs", type=int, default=1, help="worker threads per scenario")
    parser.add_argument("--filter", default=None,
                        help="glob over scenario or scenario/check names")
    parser.add_argument("--tables", action="store_true",
                        help="emit per-check convergence tables")
    parser.add_argument("--timings", action="store_true",
                        help="record wall times in the CSV (off by default so "
                             "reports are byte-identical across runs)")
    args = parser.parse_args(argv)

    seed_override = None
    if os.environ.get("BDTRACE_SEED"):
        try:
            seed_override = int(os.environ["BDTRACE_SEED"])
        except ValueError:
            print("error: BDTRACE_SEED must be an integer", file=sys.stderr)
            return 2

    try:
        rows: list[ResultRow] = []
        for cfg in _collect_configs(args.config):
            scn = load_scenario(cfg)
            rows.extend(run_scenario(scn, args.tol_scale, seed_override,
                                     jobs=max(1, args.jobs), name_filter=args.filter))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    rows.sort(key=lambda r: (r.scenario, r.check))
    csv_path = write_report(rows, Path(args.out), args.timings, args.tables)
    n_fail = sum(1 for r in rows if not r.passed)
    for r in rows:
        print(f"{r.scenario:24} {r.check:34} {r.residual:13.4e} "
              f"{'pass' if r.passed else 'FAIL'}")
    print(f"report: {csv_path} ({len(rows)} checks, {n_fail} failures)")
    return 0 if n_fail == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
