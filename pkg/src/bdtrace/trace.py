"""Boundary traces and interface limits: directional limits along admissible
rays, componentwise trace assembly, averaged traces on boundary balls,
one-sided half-ball limits on interfaces, and the strain-density diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import symtensor as st
from .fields import FieldBase, Interface, InterfacePiece, PiecewiseField, _piece_rule_near
from .geometry import (
    Collar,
    Domain,
    GeometryError,
    LipschitzGraphChart,
    admissible_radius,
    make_collar,
    plane_basis,
)
from .quadrature import LimitEstimate, QuadratureSpec, gauss_segments, limit_extrapolate, surface_rule

__all__ = [
    "NonConvergedError",
    "TraceSample",
    "ChartTraceField",
    "default_delta",
    "directional_trace",
    "assemble_trace",
    "chart_trace_field",
    "trace_field",
    "boundary_chart_at",
    "averaged_trace",
    "averaged_defect",
    "one_sided_limits",
    "one_sided_estimates",
    "strain_density",
]

TRACE_TOL = 1e-4
# 12 halvings of the start thickness: 8 leave the settle residual of unit-slope
# fields above the default tolerance. The rate fit still uses the last 4 samples.
DEFAULT_HALVINGS = 12


class NonConvergedError(RuntimeError):
    """A required limit failed to converge; the sampled sequence is attached."""

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


@dataclass
class TraceSample:
    """Directional limit record at one boundary point."""

    point: np.ndarray
    xi_world: np.ndarray
    t_values: np.ndarray
    values: np.ndarray
    estimate: LimitEstimate


def default_delta(chart: LipschitzGraphChart) -> float:
    """Tilt delta placing the tilted directions at half the admissible radius."""
    eta0 = admissible_radius(chart.lipschitz_constant)
    c = 1.0 - eta0 * eta0 / 8.0
    return math.sqrt(1.0 / (c * c) - 1.0)


def _tilted_direction(dim: int, axis: int, delta: float) -> np.ndarray:
    xi = np.zeros(dim)
    xi[-1] = 1.0
    xi[axis] += delta
    return xi / np.linalg.norm(xi)


def _check_admissible(chart: LipschitzGraphChart, xi_frame: np.ndarray):
    en = np.zeros(chart.dim)
    en[-1] = 1.0
    if np.linalg.norm(xi_frame - en) >= admissible_radius(chart.lipschitz_constant):
        raise GeometryError("direction is not admissible for this chart")


def _ray_dot_values(field: FieldBase, points: np.ndarray, xi_world: np.ndarray,
                    ts: np.ndarray) -> np.ndarray:
    """u(y - t xi) . xi for all boundary points and offsets, shape (m, T)."""
    out = np.empty((points.shape[0], ts.shape[0]))
    for j, t in enumerate(ts):
        vals = field._eval(points - t * xi_world)
        out[:, j] = vals @ xi_world
    return out


def directional_estimates(field: FieldBase, chart: LipschitzGraphChart, domain: Domain,
                          points: np.ndarray, xi_frame, tol: float = TRACE_TOL,
                          t0: float | None = None, halvings: int = DEFAULT_HALVINGS,
                          collar: Collar | None = None, retries: int = 8):
    """Batched directional limits of u(y - t xi) . xi at boundary points.

    Non-converged nodes are retried with the start offset halved (rays may
    cross an interface at fixed depth; shrinking the window restores a smooth
    tail). Returns a list of LimitEstimate, one per point.
    """
    xi_frame = np.asarray(xi_frame, dtype=float)
    _check_admissible(chart, xi_frame)
    if collar is None:
        collar = make_collar(chart, xi_frame, domain)
    if t0 is None:
        t0 = collar.epsilon0 / 2.0
    xi_world = xi_frame @ chart.frame
    pts = np.atleast_2d(points)
    estimates: list[LimitEstimate | None] = [None] * pts.shape[0]
    active = np.arange(pts.shape[0])
    cur_t0 = float(t0)
    for _ in range(retries + 1):
        ts = cur_t0 * 2.0 ** (-np.arange(halvings + 1, dtype=float))
        rows = _ray_dot_values(field, pts[active], xi_world, ts)
        still = []
        for k, idx in enumerate(active):
            est = limit_extrapolate(list(zip(ts, rows[k])), tol)
            estimates[idx] = est
            if not est.converged:
                still.append(idx)
        if not still:
            break
        active = np.array(still)
        cur_t0 /= 2.0
    return estimates


def directional_trace(field: FieldBase, chart: LipschitzGraphChart, domain: Domain,
                      y, xi_frame, tol: float = TRACE_TOL,
                      t0: float | None = None, halvings: int = DEFAULT_HALVINGS) -> LimitEstimate:
    """Extrapolated limit of u(y - t xi) . xi as t -> 0+ at one boundary point."""
    est = directional_estimates(field, chart, domain, np.atleast_2d(y), xi_frame,
                                tol=tol, t0=t0, halvings=halvings)[0]
    return est


def trace_sample(field: FieldBase, chart: LipschitzGraphChart, domain: Domain,
                 y, xi_frame, tol: float = TRACE_TOL,
                 halvings: int = DEFAULT_HALVINGS) -> TraceSample:
    """Directional limit at one point together with its sampled ray values."""
    est = directional_trace(field, chart, domain, y, xi_frame, tol=tol,
                            halvings=halvings)
    ts = np.array([h for h, _ in est.samples])
    vals = np.array([v for _, v in est.samples])
    xi_world = np.asarray(xi_frame, dtype=float) @ chart.frame
    return TraceSample(np.asarray(y, dtype=float), xi_world, ts, vals, est)


def _assemble_from_estimates(chart, g_n, g_tilted, delta):
    """Frame components: gamma_n plus the tilted-limit difference quotients."""
    dim = chart.dim
    gamma = np.empty(dim)
    gamma[-1] = g_n
    root = math.sqrt(1.0 + delta * delta)
    for i in range(dim - 1):
        gamma[i] = (root * g_tilted[i] - g_n) / delta
    return gamma


def assemble_trace(field: FieldBase, chart: LipschitzGraphChart, domain: Domain,
                   y, delta: float | None = None, tol: float = TRACE_TOL,
                   halvings: int = DEFAULT_HALVINGS) -> np.ndarray:
    """Full trace vector at a boundary point, in frame components.

    The graph-direction limit gives the last component; tilted directions
    (e_n + delta e_i)/sqrt(1+delta^2) give the others by difference quotients.
    """
    if delta is None:
        delta = default_delta(chart)
    dim = chart.dim
    en = np.zeros(dim)
    en[-1] = 1.0
    ests = [directional_trace(field, chart, domain, y, en, tol=tol, halvings=halvings)]
    for i in range(dim - 1):
        xi = _tilted_direction(dim, i, delta)
        ests.append(directional_trace(field, chart, domain, y, xi, tol=tol, halvings=halvings))
    if not all(e.converged for e in ests):
        raise NonConvergedError("directional limit did not converge at the requested point",
                                estimates=ests)
    return _assemble_from_estimates(chart, ests[0].value, [e.value for e in ests[1:]], delta)


@dataclass
class ChartTraceField:
    """Trace values at the surface quadrature nodes of one chart patch."""

    chart: LipschitzGraphChart
    params: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    gamma_frame: np.ndarray
    gamma_world: np.ndarray
    converged: np.ndarray
    delta: float

    @property
    def partial(self) -> bool:
        return not bool(np.all(self.converged))


def interface_snaps(chart: LipschitzGraphChart, interface: Interface | None):
    """Parameter locations where interface pieces cross the chart patch.

    Boundary traces jump there; snapping surface cells keeps per-cell
    smoothness. Only 1d parameter windows are scanned.
    """
    if interface is None or chart.param_dim != 1:
        return ()
    lo, hi = chart.window[0]
    crossings = []
    for piece in interface.pieces:
        def gap(s):
            pts = np.atleast_2d(chart.surface_point(s[:, None]))
            return piece.signed_offset(pts)

        crossings += [c for c in _find_crossings(gap, lo, hi)
                      if piece.covers(chart.surface_point(np.array([[c]]))[0])]
    return (tuple(crossings),)


def chart_trace_field(field: FieldBase, chart: LipschitzGraphChart, domain: Domain,
                      spec: QuadratureSpec = QuadratureSpec(), tol: float = TRACE_TOL,
                      delta: float | None = None, halvings: int = DEFAULT_HALVINGS) -> ChartTraceField:
    """Assembled trace at every surface quadrature node of a chart."""
    if delta is None:
        delta = default_delta(chart)
    snap = interface_snaps(chart, field.interface)
    params, points, weights = surface_rule(chart, chart.window, spec.cells_per_axis,
                                           spec.order, snap=snap)
    normals = chart.normal(params)
    dim = chart.dim
    en = np.zeros(dim)
    en[-1] = 1.0
    all_est = [directional_estimates(field, chart, domain, points, en, tol=tol, halvings=halvings)]
    for i in range(dim - 1):
        xi = _tilted_direction(dim, i, delta)
        all_est.append(directional_estimates(field, chart, domain, points, xi,
                                             tol=tol, halvings=halvings))
    m = points.shape[0]
    gamma_frame = np.empty((m, dim))
    converged = np.ones(m, dtype=bool)
    for k in range(m):
        ests = [col[k] for col in all_est]
        converged[k] = all(e.converged for e in ests)
        gamma_frame[k] = _assemble_from_estimates(chart, ests[0].value,
                                                  [e.value for e in ests[1:]], delta)
    gamma_world = gamma_frame @ chart.frame
    return ChartTraceField(chart, params, points, weights, normals,
                           gamma_frame, gamma_world, converged, delta)


def trace_field(field: FieldBase, domain: Domain, spec: QuadratureSpec = QuadratureSpec(),
                tol: float = TRACE_TOL, halvings: int = DEFAULT_HALVINGS) -> list[ChartTraceField]:
    """Traces on every chart of the domain's boundary tiling."""
    return [chart_trace_field(field, ch, domain, spec, tol, halvings=halvings)
            for ch in domain.charts]


def boundary_chart_at(domain: Domain, x, tol: float = 1e-9) -> LipschitzGraphChart:
    """Chart whose patch contains the boundary point x (most interior match)."""
    best = None
    best_margin = -np.inf
    for ch in domain.charts:
        y = ch.frame_coords(np.asarray(x, dtype=float))
        p, h = y[:-1], y[-1]
        inside = all(lo - 1e-12 <= p[k] <= hi + 1e-12 for k, (lo, hi) in enumerate(ch.window))
        if not inside:
            continue
        if abs(float(ch.graph_height(p[None, :])[0]) - h) > tol:
            continue
        margin = min(min(p[k] - lo, hi - p[k]) for k, (lo, hi) in enumerate(ch.window))
        if margin > best_margin:
            best, best_margin = ch, margin
    if best is None:
        raise GeometryError("point does not lie on any chart patch of the domain")
    return best


# ----------------------------------------------------------------------------
# Ball-section quadrature (boundary balls capped by the graph; half balls).


def _find_crossings(f, lo: float, hi: float, probes: int = 129) -> list[float]:
    """Zeros of a scalar function located by dense sampling plus bisection."""
    s = np.linspace(lo, hi, probes)
    v = f(s)
    out = []
    for i in range(probes - 1):
        if v[i] == 0.0:
            out.append(float(s[i]))
        if v[i] * v[i + 1] < 0:
            a, b, fa = s[i], s[i + 1], v[i]
            for _ in range(60):
                mid = 0.5 * (a + b)
                fm = float(f(np.array([mid]))[0])
                if fa * fm <= 0:
                    b = mid
                else:
                    a, fa = mid, fm
            out.append(0.5 * (a + b))
    return out


def _chart_ball_rule(chart: LipschitzGraphChart, x_world, rho: float,
                     cells: int = 12, order: int = 4):
    """Rule over B_rho(x) intersected with the chart's sub-graph side (n=2, 3).

    Columns run along the graph axis between the ball caps and the graph;
    angular cells are snapped to cap/graph crossings and graph kinks (n=2).
    """
    y = chart.frame_coords(np.asarray(x_world, dtype=float))
    xp, xn = y[:-1], float(y[-1])
    d = chart.param_dim
    if d == 1:
        snaps = []

        def upper_gap(theta):
            w = xp[0] + rho * np.sin(theta)
            return chart.graph_height(w[:, None]) - (xn + rho * np.cos(theta))

        def lower_gap(theta):
            w = xp[0] + rho * np.sin(theta)
            return chart.graph_height(w[:, None]) - (xn - rho * np.cos(theta))

        snaps += _find_crossings(upper_gap, -np.pi / 2, np.pi / 2)
        snaps += _find_crossings(lower_gap, -np.pi / 2, np.pi / 2)
        kinks = chart.kinks[0] if chart.kinks else ()
        for kk in kinks:
            u = (kk - xp[0]) / rho
            if -1.0 < u < 1.0:
                snaps.append(math.asin(u))
        tn, tw = gauss_segments(-np.pi / 2, np.pi / 2, cells, order, snaps)
        w = xp[0] + rho * np.sin(tn)
        aw = chart.graph_height(w[:, None])
        lower = xn - rho * np.cos(tn)
        upper = np.minimum(aw, xn + rho * np.cos(tn))
        thick = np.maximum(upper - lower, 0.0)
        ref, refw = gauss_segments(0.0, 1.0, max(4, cells // 2), order)
        zn = lower[:, None] + ref[None, :] * thick[:, None]
        K, S = tn.shape[0], ref.shape[0]
        pts_f = np.empty((K * S, 2))
        pts_f[:, 0] = np.repeat(w, S)
        pts_f[:, 1] = zn.ravel()
        wts = ((tw * rho * np.cos(tn) * thick)[:, None] * refw[None, :]).ravel()
        keep = wts > 0.0
        return chart.world_coords(pts_f)[keep], wts[keep]
    # n = 3: cylindrical columns over the disc; no cap snapping (flat cases exact).
    tn, tw = gauss_segments(0.0, np.pi / 2, cells, order)
    pn, pw = gauss_segments(0.0, 2.0 * np.pi, cells, order)
    TT, PP = np.meshgrid(tn, pn, indexing="ij")
    WT = np.outer(tw, pw)
    w1 = xp[0] + rho * np.sin(TT) * np.cos(PP)
    w2 = xp[1] + rho * np.sin(TT) * np.sin(PP)
    cols = np.stack([w1.ravel(), w2.ravel()], axis=-1)
    colw = (WT * rho**2 * np.sin(TT) * np.cos(TT)).ravel()
    aw = chart.graph_height(cols)
    cosv = np.cos(TT).ravel()
    lower = xn - rho * cosv
    upper = np.minimum(aw, xn + rho * cosv)
    thick = np.maximum(upper - lower, 0.0)
    ref, refw = gauss_segments(0.0, 1.0, max(4, cells // 2), order)
    S = ref.shape[0]
    zn = lower[:, None] + ref[None, :] * thick[:, None]
    pts_f = np.empty((cols.shape[0] * S, 3))
    pts_f[:, 0] = np.repeat(cols[:, 0], S)
    pts_f[:, 1] = np.repeat(cols[:, 1], S)
    pts_f[:, 2] = zn.ravel()
    wts = (colw * thick)[:, None] * refw[None, :]
    return chart.world_coords(pts_f), wts.ravel()


def _interior_ball_rule(x_world, rho: float, dim: int, cells: int = 12, order: int = 4):
    """Rule over a full ball (smooth polar/cylindrical parametrization)."""
    x = np.asarray(x_world, dtype=float)
    if dim == 2:
        tn, tw = gauss_segments(-np.pi / 2, np.pi / 2, cells, order)
        ref, refw = gauss_segments(0.0, 1.0, max(4, cells // 2), order)
        w = x[0] + rho * np.sin(tn)
        lower = x[1] - rho * np.cos(tn)
        thick = 2.0 * rho * np.cos(tn)
        zn = lower[:, None] + ref[None, :] * thick[:, None]
        pts = np.empty((tn.shape[0] * ref.shape[0], 2))
        pts[:, 0] = np.repeat(w, ref.shape[0])
        pts[:, 1] = zn.ravel()
        wts = (tw * rho * np.cos(tn) * thick)[:, None] * refw[None, :]
        return pts, wts.ravel()
    tn, tw = gauss_segments(0.0, np.pi / 2, cells, order)
    pn, pw = gauss_segments(0.0, 2.0 * np.pi, cells, order)
    TT, PP = np.meshgrid(tn, pn, indexing="ij")
    WT = np.outer(tw, pw)
    w1 = x[0] + rho * np.sin(TT) * np.cos(PP)
    w2 = x[1] + rho * np.sin(TT) * np.sin(PP)
    cols = np.stack([w1.ravel(), w2.ravel()], axis=-1)
    colw = (WT * rho**2 * np.sin(TT) * np.cos(TT)).ravel()
    cosv = np.cos(TT).ravel()
    lower = x[2] - rho * cosv
    thick = 2.0 * rho * cosv
    ref, refw = gauss_segments(0.0, 1.0, max(4, cells // 2), order)
    S = ref.shape[0]
    zn = lower[:, None] + ref[None, :] * thick[:, None]
    pts = np.empty((cols.shape[0] * S, 3))
    pts[:, 0] = np.repeat(cols[:, 0], S)
    pts[:, 1] = np.repeat(cols[:, 1], S)
    pts[:, 2] = zn.ravel()
    wts = (colw * thick)[:, None] * refw[None, :]
    return pts, wts.ravel()


def averaged_trace(field: FieldBase, domain: Domain, x, rho0: float = 0.05,
                   levels: int = DEFAULT_HALVINGS, tol: float = TRACE_TOL,
                   chart: LipschitzGraphChart | None = None,
                   cells: int = 12) -> LimitEstimate:
    """Limit of ball averages (1/|B_rho(x) n Omega|) int_{B_rho(x) n Omega} u."""
    if chart is None:
        chart = boundary_chart_at(domain, x)
    rhos = rho0 * 2.0 ** (-np.arange(levels + 1, dtype=float))
    samples = []
    for rho in rhos:
        pts, wts = _chart_ball_rule(chart, x, rho, cells=cells)
        vol = float(np.sum(wts))
        avg = (wts @ field._eval(pts)) / vol
        samples.append((rho, avg))
    return limit_extrapolate(samples, tol)


def averaged_defect(field: FieldBase, domain: Domain, x, reference,
                    rho0: float = 0.05, levels: int = 8,
                    chart: LipschitzGraphChart | None = None,
                    cells: int = 12) -> list[tuple[float, float]]:
    """Normalized defect (1/rho^n) int_{B_rho n Omega} |u - gamma(u)(x)| per radius."""
    if chart is None:
        chart = boundary_chart_at(domain, x)
    ref = np.asarray(reference, dtype=float)
    out = []
    for rho in rho0 * 2.0 ** (-np.arange(levels + 1, dtype=float)):
        pts, wts = _chart_ball_rule(chart, x, rho, cells=cells)
        val = float(wts @ np.linalg.norm(field._eval(pts) - ref, axis=1))
        out.append((float(rho), val / rho**field.dim))
    return out


def _half_ball_rule(piece: InterfacePiece, x_world, direction, rho: float,
                    cells: int = 12, order: int = 4):
    """Rule over the half ball {|z - x| < rho, (z - x) . direction > 0}, with
    columns split exactly where they cross the interface graph."""
    x = np.asarray(x_world, dtype=float)
    nu = np.asarray(direction, dtype=float)
    dim = x.shape[0]
    tang = plane_basis(nu)

    def offset_at(z_prime_cols, s):
        pts = x + z_prime_cols @ tang + s[:, None] * nu
        return piece.signed_offset(pts)

    if dim == 2:
        tn, tw = gauss_segments(-np.pi / 2, np.pi / 2, cells, order)
        cols = (rho * np.sin(tn))[:, None]
        colw = tw * rho * np.cos(tn)
        caps = rho * np.cos(tn)
    else:
        tn, tw = gauss_segments(0.0, np.pi / 2, cells, order)
        pn, pw = gauss_segments(0.0, 2.0 * np.pi, cells, order)
        TT, PP = np.meshgrid(tn, pn, indexing="ij")
        WT = np.outer(tw, pw)
        r = rho * np.sin(TT)
        cols = np.stack([(r * np.cos(PP)).ravel(), (r * np.sin(PP)).ravel()], axis=-1)
        colw = (WT * rho**2 * np.sin(TT) * np.cos(TT)).ravel()
        caps = rho * np.cos(TT).ravel()

    # Interface crossing per column (monotone offset along the normal).
    lo = np.full(cols.shape[0], -rho)
    hi = np.full(cols.shape[0], rho)
    f_lo = offset_at(cols, lo)
    f_hi = offset_at(cols, hi)
    has = f_lo * f_hi < 0
    sign_up = f_hi > f_lo
    a, b = lo.copy(), hi.copy()
    for _ in range(60):
        mid = 0.5 * (a + b)
        fm = offset_at(cols, mid)
        go_right = np.where(sign_up, fm < 0, fm > 0)
        a = np.where(go_right, mid, a)
        b = np.where(go_right, b, mid)
    cross = np.where(has, 0.5 * (a + b), np.inf)
    split = np.clip(cross, 0.0, caps)
    # collapse slivers so no quadrature node can sit on the interface
    eps_r = 1e-9 * rho
    split = np.where(split < eps_r, 0.0, split)
    split = np.where(split > caps - eps_r, caps, split)

    ref, refw = gauss_segments(0.0, 1.0, max(4, cells // 2), order)
    S = ref.shape[0]
    segs = []
    for seg_lo, seg_hi in ((np.zeros_like(caps), split), (split, caps)):
        thick = np.maximum(seg_hi - seg_lo, 0.0)
        s = seg_lo[:, None] + ref[None, :] * thick[:, None]
        pts = x + np.repeat(cols, S, axis=0) @ tang + s.reshape(-1, 1) * nu
        wts = ((colw * thick)[:, None] * refw[None, :]).ravel()
        keep = wts > 0.0
        segs.append((pts[keep], wts[keep]))
    pts = np.concatenate([p for p, _ in segs], axis=0)
    wts = np.concatenate([w for _, w in segs], axis=0)
    return pts, wts


def _locate_piece(interface: Interface, x, tol: float = 1e-9) -> InterfacePiece:
    for piece in interface.pieces:
        if piece.covers(x) and abs(float(piece.signed_offset(x))) <= tol:
            return piece
    raise ValueError("point does not lie on the interface")


def one_sided_estimates(field: FieldBase, interface: Interface, x,
                        rho0: float = 0.05, levels: int = DEFAULT_HALVINGS,
                        tol: float = TRACE_TOL, cells: int = 12):
    """Half-ball average limits on both sides of the oriented normal."""
    x = np.asarray(x, dtype=float)
    piece = _locate_piece(interface, x)
    params = piece.frame_coords(x)[:-1]
    nu = piece.oriented_normal(params[None, :])[0]
    rhos = rho0 * 2.0 ** (-np.arange(levels + 1, dtype=float))
    out = []
    for direction in (nu, -nu):
        samples = []
        for rho in rhos:
            pts, wts = _half_ball_rule(piece, x, direction, rho, cells=cells)
            vol = float(np.sum(wts))
            samples.append((rho, (wts @ field._eval(pts)) / vol))
        out.append(limit_extrapolate(samples, tol))
    return out[0], out[1]


def one_sided_limits(field: FieldBase, interface: Interface, x,
                     rho0: float = 0.05, levels: int = DEFAULT_HALVINGS,
                     tol: float = TRACE_TOL, cells: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Lebesgue limits (u_plus, u_minus) at a point on the interface."""
    plus, minus = one_sided_estimates(field, interface, x, rho0, levels, tol, cells)
    if not (plus.converged and minus.converged):
        raise NonConvergedError("one-sided limit did not converge", estimates=(plus, minus))
    return plus.vector(), minus.vector()


def strain_density(field: FieldBase, x, rhos: Sequence[float],
                   domain: Domain | None = None,
                   chart: LipschitzGraphChart | None = None,
                   tol: float = TRACE_TOL, cells: int = 12) -> LimitEstimate:
    """Sampled ratio |Eu|(B_rho(x) n Omega) / rho^(n-1) with an extrapolated limit.

    The strain mass combines the integral of |e| over the ball section with the
    jump measure of interface pieces inside the ball.
    """
    x = np.asarray(x, dtype=float)
    if chart is None and domain is not None:
        try:
            chart = boundary_chart_at(domain, x)
        except GeometryError:
            chart = None
    samples = []
    for rho in rhos:
        if chart is not None:
            pts, wts = _chart_ball_rule(chart, x, float(rho), cells=cells)
        else:
            pts, wts = _interior_ball_rule(x, float(rho), field.dim, cells=cells)
        mass = float(wts @ st.tri_norm(field.strain_tri(pts), field.dim))
        if isinstance(field, PiecewiseField):
            for piece in field.interface.pieces:
                rule = _piece_rule_near(piece, x, float(rho), cells=8, order=4)
                if rule is None:
                    continue
                params, spts, swts = rule
                jump = field.jump(params, piece)
                nu = piece.oriented_normal(params)
                mass += float(swts @ st.tri_norm(st.tri_outer(jump, nu), field.dim))
        samples.append((float(rho), mass / float(rho) ** (field.dim - 1)))
    return limit_extrapolate(samples, tol)
