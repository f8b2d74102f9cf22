"""Composite Gauss-Legendre quadrature over boxes, graph bands, and graph
surfaces, plus extrapolation of sampled limits.

Regions live in world coordinates with the graph axis last. Integrands are
called once on a stacked array of nodes of shape (m, n) and must return
either (m,) scalars or (m, k) stacked values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "Box",
    "GraphBand",
    "LimitEstimate",
    "gauss_segments",
    "integrate_volume",
    "integrate_surface",
    "surface_rule",
    "limit_extrapolate",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss points per cell, cells per axis, and number of refinement levels."""

    order: int = 4
    cells_per_axis: int = 32
    refinement_levels: int = 3

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("quadrature order must be at least 2")
        if self.cells_per_axis < 4:
            raise ValueError("cells_per_axis must be at least 4")
        if self.refinement_levels < 1:
            raise ValueError("refinement_levels must be at least 1")

    def with_cells(self, cells: int) -> "QuadratureSpec":
        return QuadratureSpec(self.order, cells, self.refinement_levels)

    def refined(self, k: int = 1) -> "QuadratureSpec":
        return self.with_cells(self.cells_per_axis * 2**k)


_leggauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _leggauss_cache:
        _leggauss_cache[order] = np.polynomial.legendre.leggauss(order)
    return _leggauss_cache[order]


def gauss_segments(lo: float, hi: float, cells: int, order: int,
                   snap: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [lo, hi].

    Cell edges are uniform; any snap values strictly inside the interval are
    inserted as extra edges so that per-cell smoothness survives kinks.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    edges = np.linspace(lo, hi, cells + 1)
    inner = [s for s in snap if lo + 1e-14 * (hi - lo) < s < hi - 1e-14 * (hi - lo)]
    if inner:
        edges = np.unique(np.concatenate([edges, np.asarray(inner, dtype=float)]))
    ref_x, ref_w = _leggauss(order)
    a = edges[:-1]
    h = np.diff(edges)
    nodes = a[:, None] + (ref_x[None, :] + 1.0) * 0.5 * h[:, None]
    wts = ref_w[None, :] * 0.5 * h[:, None]
    return nodes.ravel(), wts.ravel()


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given as ((lo, hi), ...) per axis."""

    bounds: tuple[tuple[float, float], ...]

    @property
    def dim(self) -> int:
        return len(self.bounds)


@dataclass(frozen=True)
class GraphBand:
    """Region {x' in window, lower(x') < x_n < upper(x')} (graph axis last).

    lower/upper may be constants or callables of stacked (m, n-1) parameter
    arrays. snap lists per-parameter-axis break locations for kinked bounds.
    """

    window: tuple[tuple[float, float], ...]
    lower: float | Callable
    upper: float | Callable
    snap: tuple[tuple[float, ...], ...] = ()

    @property
    def dim(self) -> int:
        return len(self.window) + 1


Region = Box | GraphBand | Sequence


@dataclass(frozen=True)
class QuadratureResult:
    """Integral value with a refinement-based error estimate and (h, value) table."""

    value: float | np.ndarray
    error: float
    table: tuple = ()


def _param_grid(windows, cells, order, snap=()):
    """Tensor rule over a product of intervals: returns (m, d) nodes, (m,) weights."""
    axes = []
    for k, (lo, hi) in enumerate(windows):
        s = snap[k] if k < len(snap) else ()
        axes.append(gauss_segments(lo, hi, cells, order, s))
    if len(axes) == 1:
        return axes[0][0][:, None], axes[0][1]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.ones(pts.shape[0])
    for w in wgrids:
        wts = wts * w.ravel()
    return pts, wts


def _eval_bound(bound, params):
    if callable(bound):
        return np.asarray(bound(params), dtype=float)
    return np.full(params.shape[0], float(bound))


def _band_rule(band: GraphBand, cells: int, order: int):
    params, pw = _param_grid(band.window, cells, order, band.snap)
    lower = _eval_bound(band.lower, params)
    upper = _eval_bound(band.upper, params)
    thick = np.maximum(upper - lower, 0.0)
    ref, refw = gauss_segments(0.0, 1.0, cells, order)
    # x_n = lower + s * (upper - lower); Jacobian = thickness per column.
    xn = lower[:, None] + ref[None, :] * thick[:, None]
    m, t = params.shape[0], ref.shape[0]
    pts = np.empty((m * t, band.dim))
    pts[:, :-1] = np.repeat(params, t, axis=0)
    pts[:, -1] = xn.ravel()
    wts = (pw[:, None] * refw[None, :] * thick[:, None]).ravel()
    return pts, wts


def _box_rule(box: Box, cells: int, order: int):
    return _param_grid(box.bounds, cells, order)


def region_rule(region: Region, cells: int, order: int):
    """Nodes and weights for a box, band, or sequence of those."""
    if isinstance(region, Box):
        return _box_rule(region, cells, order)
    if isinstance(region, GraphBand):
        return _band_rule(region, cells, order)
    parts = [region_rule(r, cells, order) for r in region]
    pts = np.concatenate([p for p, _ in parts], axis=0)
    wts = np.concatenate([w for _, w in parts], axis=0)
    return pts, wts


def _apply_rule(f, pts, wts):
    vals = np.asarray(f(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite integrand sample in quadrature")
    if vals.ndim == 1:
        return float(wts @ vals)
    return wts @ vals


def integrate_volume(f, region: Region, spec: QuadratureSpec = QuadratureSpec()) -> QuadratureResult:
    """Integrate f over a sub-graph band or plain box (or a union of them).

    Runs spec.refinement_levels levels with cell counts doubling; the value is
    the finest level's and the error estimate is the last refinement increment.
    """
    table = []
    value = prev = None
    for lvl in range(spec.refinement_levels):
        cells = spec.cells_per_axis * 2**lvl
        pts, wts = region_rule(region, cells, spec.order)
        prev = value
        value = _apply_rule(f, pts, wts)
        table.append((1.0 / cells, value))
    err = float("nan") if prev is None else float(np.max(np.abs(np.asarray(value) - np.asarray(prev))))
    return QuadratureResult(value, err, tuple(table))


def surface_rule(chart, window=None, cells: int = 32, order: int = 4, snap=()):
    """Quadrature rule on a graph patch.

    Returns (params, points, weights): parameter nodes (m, n-1), world points
    (m, n), and weights including the area factor sqrt(1 + |grad a|^2). Cell
    edges snap to the chart's kinks and to any extra per-axis snap values.
    """
    win = tuple(window) if window is not None else tuple(chart.window)
    kinks = getattr(chart, "kinks", None) or ()
    merged = []
    for k in range(len(win)):
        vals = list(kinks[k]) if k < len(kinks) else []
        if k < len(snap):
            vals += list(snap[k])
        merged.append(tuple(vals))
    params, pw = _param_grid(win, cells, order, tuple(merged))
    pts = chart.surface_point(params)
    wts = pw * chart.area_weight(params)
    return params, pts, wts


def integrate_surface(f, chart, window=None, spec: QuadratureSpec = QuadratureSpec()) -> QuadratureResult:
    """Integrate f over a graph patch with the area-formula weight."""
    table = []
    value = prev = None
    for lvl in range(spec.refinement_levels):
        cells = spec.cells_per_axis * 2**lvl
        _, pts, wts = surface_rule(chart, window, cells, spec.order)
        prev = value
        value = _apply_rule(f, pts, wts)
        table.append((1.0 / cells, value))
    err = float("nan") if prev is None else float(np.max(np.abs(np.asarray(value) - np.asarray(prev))))
    return QuadratureResult(value, err, tuple(table))


# ----------------------------------------------------------------------------
# Limit extrapolation


@dataclass
class LimitEstimate:
    """Extrapolated limit of a sampled sequence v(h) as h -> 0.

    residual is the magnitude of the extrapolated correction |v_inf - v_last|;
    converged requires residual <= tol and a fitted rate above 0.2.
    """

    value: float | np.ndarray
    rate: float
    residual: float
    converged: bool
    samples: tuple = ()
    last_increment: float = 0.0

    def vector(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.value, dtype=float))


def limit_extrapolate(samples, tol: float) -> LimitEstimate:
    """Fit v_j = v_inf + C h_j^p on the last 4 samples and extrapolate.

    samples is a sequence of (h_j, v_j) with h_j strictly decreasing; values
    may be scalars or arrays (extrapolated componentwise with a shared rate).
    Oscillatory tails (non-decreasing increment norms) are reported as not
    converged rather than raising.
    """
    if len(samples) < 3:
        raise ValueError("limit extrapolation needs at least 3 samples")
    hs = np.array([float(h) for h, _ in samples])
    if not np.all(np.diff(hs) < 0):
        raise ValueError("sample spacings h_j must be strictly decreasing")
    vals = np.stack([np.atleast_1d(np.asarray(v, dtype=float)) for _, v in samples])
    scalar = np.asarray(samples[0][1]).ndim == 0

    m = min(4, len(samples))
    h = hs[-m:]
    v = vals[-m:]
    d = np.diff(v, axis=0)
    dn = np.linalg.norm(d, axis=1)
    scale = max(1.0, float(np.linalg.norm(v[-1])))

    def finish(value, rate, residual, converged):
        val = float(value[0]) if scalar else value
        return LimitEstimate(val, rate, residual, converged, tuple(samples), float(dn[-1]) if dn.size else 0.0)

    if np.max(dn) <= 1e-14 * scale:
        # Constant tail: the limit is the last value.
        return finish(v[-1].copy(), float("inf"), 0.0, 0.0 <= tol)

    if np.any(dn[1:] >= dn[:-1] * (1.0 + 1e-12)):
        # Oscillatory / non-contracting tail: no trustworthy fit.
        return finish(v[-1].copy(), 0.0, float(np.max(dn)), False)

    mask = dn > 1e-300
    p = float(np.polyfit(np.log(h[:-1][mask]), np.log(dn[mask]), 1)[0])
    rho = (h[-1] / h[-2]) ** p
    if not np.isfinite(rho) or rho >= 1.0:
        return finish(v[-1].copy(), p, float(dn[-1]), False)
    correction = d[-1] * (rho / (1.0 - rho))
    v_inf = v[-1] + correction
    residual = float(np.linalg.norm(correction))
    converged = residual <= tol and p > 0.2
    return finish(v_inf, p, residual, converged)
