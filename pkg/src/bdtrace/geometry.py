"""Lipschitz graph charts, transversal cone constructions, reparametrized
graphs, and boundary collars.

A chart describes a boundary patch as the graph of a Lipschitz function in an
orthonormal frame whose last vector is the graph direction; the region below
the graph is the domain side. The open cone of transversal directions, its
sub-cones around an admissible direction, and the reparametrized graph along
such a direction carry explicit constants derived from the Lipschitz bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import GraphBand, gauss_segments

__all__ = [
    "GeometryError",
    "cone_aperture",
    "admissible_radius",
    "in_cone",
    "cone_beta",
    "area_weight",
    "reparametrized_lipschitz",
    "plane_basis",
    "LipschitzGraphChart",
    "Domain",
    "Collar",
    "make_collar",
    "collar_volume_sample",
    "CollarSamples",
    "reparametrize",
]

FRAME_TOL = 1e-12


class GeometryError(RuntimeError):
    """Violated geometric precondition (audit failure, bad bracket, bad direction)."""


def cone_aperture(lipschitz_constant: float) -> float:
    """Aperture alpha = L / sqrt(1 + L^2) of the transversal cone."""
    L = float(lipschitz_constant)
    if L < 0:
        raise ValueError("Lipschitz constant must be nonnegative")
    return L / math.sqrt(1.0 + L * L)


def admissible_radius(lipschitz_constant: float) -> float:
    """Radius eta0 = sqrt(2 - 2 alpha): unit xi with |xi - e_n| < eta0 are transversal."""
    return math.sqrt(2.0 - 2.0 * cone_aperture(lipschitz_constant))


def in_cone(zeta, lipschitz_constant: float) -> bool:
    """Strict membership |zeta . e_n| > alpha |zeta| in the chart frame.

    A one-ulp-scale guard keeps exact boundary directions out of the open cone
    despite rounding in alpha and the norm.
    """
    z = np.asarray(zeta, dtype=float)
    nrm = float(np.linalg.norm(z))
    if nrm == 0.0:
        raise ValueError("zero vector has no cone membership")
    return abs(float(z[-1])) > cone_aperture(lipschitz_constant) * nrm + 1e-15 * nrm


def cone_beta(xi, lipschitz_constant: float) -> float:
    """Half-angle constant beta of the sub-cone around an admissible xi.

    The sub-cone {zeta : |zeta . xi| > beta |zeta|} is contained in the
    transversal cone; beta = (2 - c0^2)/2 with c0 = min(|xi . e_n| - alpha, sqrt 2).
    """
    x = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(x) - 1.0) > 1e-10:
        raise ValueError("xi must be a unit vector")
    if not in_cone(x, lipschitz_constant):
        raise GeometryError("xi lies outside the transversal cone")
    c0 = min(abs(float(x[-1])) - cone_aperture(lipschitz_constant), math.sqrt(2.0))
    return (2.0 - c0 * c0) / 2.0


def reparametrized_lipschitz(beta: float) -> float:
    """Lipschitz bound beta / sqrt(1 - beta^2) of the reparametrized graph."""
    return beta / math.sqrt(1.0 - beta * beta)


def plane_basis(xi) -> np.ndarray:
    """Orthonormal rows spanning the hyperplane orthogonal to unit xi."""
    x = np.asarray(xi, dtype=float)
    n = x.shape[0]
    if n == 2:
        return np.array([[-x[1], x[0]]])
    # Gram-Schmidt of the two coordinate axes least aligned with xi.
    idx = np.argsort(np.abs(x))[:2]
    rows = []
    for i in idx:
        v = np.zeros(n)
        v[i] = 1.0
        v = v - (v @ x) * x
        for r in rows:
            v = v - (v @ r) * r
        rows.append(v / np.linalg.norm(v))
    return np.array(rows)


def _fd_gradient(func, params: np.ndarray) -> np.ndarray:
    """Central differences with step h = eps^(1/3) (1 + |p|) per node."""
    h = float(np.finfo(float).eps) ** (1.0 / 3.0)
    steps = h * (1.0 + np.linalg.norm(params, axis=-1, keepdims=True))
    grads = []
    for k in range(params.shape[-1]):
        dp = np.zeros_like(params)
        dp[..., k] = steps[..., 0]
        grads.append((func(params + dp) - func(params - dp)) / (2.0 * steps[..., 0]))
    return np.stack(grads, axis=-1)


@dataclass(eq=False)
class LipschitzGraphChart:
    """Boundary patch {x_n = a(x')} in an orthonormal frame; domain side below.

    frame rows are world vectors, the last row the graph direction. window and
    outer_window are parameter boxes with the inner strictly inside the outer;
    depth bounds the chart's region below the graph. Immutable after
    construction; all methods are pure.
    """

    frame: np.ndarray
    graph: Callable
    lipschitz_constant: float
    window: tuple[tuple[float, float], ...]
    outer_window: tuple[tuple[float, float], ...]
    depth: float = 1.0
    grad: Callable | None = None
    kinks: tuple[tuple[float, ...], ...] = ()
    name: str = ""
    audit_pairs: int = 1000

    def __post_init__(self):
        self.frame = np.asarray(self.frame, dtype=float)
        n = self.frame.shape[0]
        if self.frame.shape != (n, n) or n - 1 != len(self.window):
            raise GeometryError(f"frame/window shape mismatch in chart {self.name!r}")
        gram = self.frame @ self.frame.T
        if float(np.max(np.abs(gram - np.eye(n)))) >= FRAME_TOL:
            raise GeometryError(
                f"chart {self.name!r}: frame is not orthonormal "
                f"(max |e_i.e_j - delta_ij| = {np.max(np.abs(gram - np.eye(n))):.3e})"
            )
        self.window = tuple((float(lo), float(hi)) for lo, hi in self.window)
        self.outer_window = tuple((float(lo), float(hi)) for lo, hi in self.outer_window)
        for (lo, hi), (olo, ohi) in zip(self.window, self.outer_window):
            if not (olo < lo < hi < ohi):
                raise GeometryError(
                    f"chart {self.name!r}: inner window must be strictly inside the outer window"
                )
        if self.lipschitz_constant < 0:
            raise GeometryError("Lipschitz constant must be nonnegative")
        self._audit_lipschitz()

    def _audit_lipschitz(self):
        rng = np.random.default_rng(1234)
        d = self.param_dim
        lo = np.array([w[0] for w in self.outer_window])
        hi = np.array([w[1] for w in self.outer_window])
        x = lo + (hi - lo) * rng.random((self.audit_pairs, d))
        y = lo + (hi - lo) * rng.random((self.audit_pairs, d))
        num = np.abs(self.graph_height(x) - self.graph_height(y))
        den = np.linalg.norm(x - y, axis=-1)
        ok = num <= (self.lipschitz_constant + 1e-9) * den + 1e-15
        if not np.all(ok):
            worst = float(np.max(num / np.maximum(den, 1e-300)))
            raise GeometryError(
                f"chart {self.name!r}: sampled Lipschitz audit failed "
                f"(declared L = {self.lipschitz_constant}, observed quotient {worst:.6g})"
            )

    # -- coordinates ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @property
    def param_dim(self) -> int:
        return self.dim - 1

    def frame_coords(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.frame.T

    def world_coords(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) @ self.frame

    def graph_height(self, params) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        return np.asarray(self.graph(p), dtype=float)

    def surface_point(self, params) -> np.ndarray:
        p = np.atleast_2d(np.asarray(params, dtype=float))
        y = np.concatenate([p, self.graph_height(p)[:, None]], axis=1)
        out = self.world_coords(y)
        return out if np.asarray(params).ndim == 2 else out[0]

    def grad_a(self, params) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(p), dtype=float).reshape(p.shape)
        return _fd_gradient(self.graph_height, p)

    def area_weight(self, params) -> np.ndarray:
        g = self.grad_a(np.atleast_2d(np.asarray(params, dtype=float)))
        w = np.sqrt(1.0 + np.sum(g * g, axis=-1))
        return w if np.asarray(params).ndim == 2 else w[0]

    def normal(self, params) -> np.ndarray:
        """Outward unit normal (-grad a, 1)/sqrt(1+|grad a|^2) in world coordinates."""
        p = np.atleast_2d(np.asarray(params, dtype=float))
        g = self.grad_a(p)
        nu = np.concatenate([-g, np.ones((p.shape[0], 1))], axis=1)
        nu = nu / np.linalg.norm(nu, axis=1, keepdims=True)
        out = nu @ self.frame
        return out if np.asarray(params).ndim == 2 else out[0]

    def signed_offset(self, x) -> np.ndarray:
        """a(y') - y_n in frame coordinates: positive on the domain side."""
        y = np.atleast_2d(self.frame_coords(x))
        off = self.graph_height(y[:, :-1]) - y[:, -1]
        return off if np.asarray(x).ndim == 2 else off[0]

    def in_outer_region(self, x, margin: float = 0.0) -> np.ndarray:
        """Membership in the chart's domain-side region below the graph."""
        y = np.atleast_2d(self.frame_coords(x))
        ok = np.ones(y.shape[0], dtype=bool)
        for k, (lo, hi) in enumerate(self.outer_window):
            ok &= (y[:, k] > lo + margin) & (y[:, k] < hi - margin)
        off = self.graph_height(y[:, :-1]) - y[:, -1]
        ok &= (off > margin) & (off < self.depth - margin)
        return ok if np.asarray(x).ndim == 2 else bool(ok[0])


def area_weight(chart, point) -> float:
    """Area factor sqrt(1 + |grad a|^2) of a graph at a parameter point.

    Works for charts and interface pieces alike; closed-form gradients are
    used when declared, central differences otherwise.
    """
    p = np.atleast_2d(np.asarray(point, dtype=float))
    return float(chart.area_weight(p)[0])


def reparametrize(chart: LipschitzGraphChart, xi, y) -> float:
    """Height a_xi(y) of the graph over the hyperplane orthogonal to xi.

    xi and y are given in frame coordinates with y . xi = 0; returns the unique
    t with y + t xi on the graph, found by bisection (the offset is strictly
    monotone in t for transversal xi).
    """
    x = np.asarray(xi, dtype=float)
    eta0 = admissible_radius(chart.lipschitz_constant)
    en = np.zeros(chart.dim)
    en[-1] = 1.0
    if abs(np.linalg.norm(x) - 1.0) > 1e-10 or np.linalg.norm(x - en) >= eta0:
        raise GeometryError("direction xi is not admissible for this chart")
    yv = np.asarray(y, dtype=float)
    if abs(float(yv @ x)) > 1e-9 * (1.0 + np.linalg.norm(yv)):
        raise GeometryError("base point must lie in the hyperplane orthogonal to xi")
    t = _reparametrize_many(chart, x, yv[None, :])
    return float(t[0])


def _reparametrize_many(chart: LipschitzGraphChart, xi: np.ndarray, ys: np.ndarray,
                        check_window: bool = True) -> np.ndarray:
    width = max(hi - lo for lo, hi in chart.outer_window) + chart.depth
    R = (1.0 + chart.lipschitz_constant) * width

    def offset(t):
        pts = ys + t[:, None] * xi[None, :]
        return pts[:, -1] - chart.graph_height(pts[:, :-1])

    lo = np.full(ys.shape[0], -R)
    hi = np.full(ys.shape[0], R)
    flo, fhi = offset(lo), offset(hi)
    if np.any(flo >= 0) or np.any(fhi <= 0):
        raise GeometryError(
            "bracketing failure in graph reparametrization (violated transversality "
            "or base point too far from the patch)"
        )
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        fm = offset(mid)
        neg = fm < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    t = 0.5 * (lo + hi)
    if check_window:
        feet = ys + t[:, None] * xi[None, :]
        for k, (wlo, whi) in enumerate(chart.outer_window):
            if np.any(feet[:, k] < wlo - 1e-9) or np.any(feet[:, k] > whi + 1e-9):
                raise GeometryError("base point projects outside the chart's graph patch")
    return t


# ----------------------------------------------------------------------------
# Domains: a volume description plus a boundary tiling by charts.


@dataclass(eq=False)
class Domain:
    """Bounded domain: volume as a union of graph bands (world coordinates,
    graph axis last) and the boundary tiled by chart patches."""

    dim: int
    bands: tuple[GraphBand, ...]
    charts: tuple[LipschitzGraphChart, ...]
    extra_charts: tuple[LipschitzGraphChart, ...] = ()
    name: str = ""

    def contains(self, pts, margin: float = 0.0) -> np.ndarray:
        x = np.atleast_2d(np.asarray(pts, dtype=float))
        inside = np.zeros(x.shape[0], dtype=bool)
        for band in self.bands:
            ok = np.ones(x.shape[0], dtype=bool)
            for k, (lo, hi) in enumerate(band.window):
                ok &= (x[:, k] > lo + margin) & (x[:, k] < hi - margin)
            params = x[:, :-1]
            lo_v = band.lower(params) if callable(band.lower) else band.lower
            hi_v = band.upper(params) if callable(band.upper) else band.upper
            ok &= (x[:, -1] > lo_v + margin) & (x[:, -1] < hi_v - margin)
            inside |= ok
        return inside if np.asarray(pts).ndim == 2 else bool(inside[0])

    def volume_region(self):
        return list(self.bands)


# ----------------------------------------------------------------------------
# Collars A_eps = {y - t xi : y on the patch, 0 < t < eps}.


@dataclass(eq=False)
class Collar:
    """Validated collar below a chart patch along an admissible direction.

    xi is stored in frame coordinates; epsilon never exceeds the sampled
    containment bound epsilon0.
    """

    chart: LipschitzGraphChart
    xi: np.ndarray
    epsilon: float
    epsilon0: float

    @property
    def xi_world(self) -> np.ndarray:
        return self.xi @ self.chart.frame


def collar_limit(chart: LipschitzGraphChart, xi, domain: Domain,
                 samples_per_axis: int = 41, shrink: float = 0.9) -> float:
    """Largest collar thickness keeping all sampled rays inside the domain and
    the chart's outer region, shrunk by 10% for safety."""
    x = np.asarray(xi, dtype=float)
    eta0 = admissible_radius(chart.lipschitz_constant)
    en = np.zeros(chart.dim)
    en[-1] = 1.0
    if np.linalg.norm(x - en) >= eta0:
        raise GeometryError("collar direction is not admissible for the chart")
    xi_world = x @ chart.frame

    axes = [np.linspace(lo, hi, samples_per_axis) for lo, hi in chart.window]
    if chart.param_dim == 1:
        params = axes[0][:, None]
    else:
        grids = np.meshgrid(*axes, indexing="ij")
        params = np.stack([g.ravel() for g in grids], axis=-1)
    base = np.atleast_2d(chart.surface_point(params))

    cap = chart.depth

    def feasible(ts):
        pts = base - ts[:, None] * xi_world[None, :]
        return domain.contains(pts) & chart.in_outer_region(pts)

    # All constraints are monotone along admissible rays: bisection per sample.
    lo = np.zeros(base.shape[0])
    hi = np.full(base.shape[0], cap)
    ok_hi = feasible(hi)  # rays feasible at full depth keep t = cap
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        good = feasible(mid)
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    t_max = np.where(ok_hi, cap, lo)
    eps0 = shrink * float(np.min(t_max))
    if eps0 <= 0:
        raise GeometryError(
            f"chart {chart.name!r}: no positive collar thickness along the given direction"
        )
    return eps0


def make_collar(chart: LipschitzGraphChart, xi, domain: Domain,
                epsilon: float | None = None) -> Collar:
    eps0 = collar_limit(chart, xi, domain)
    if epsilon is None:
        epsilon = eps0
    if epsilon > eps0:
        raise GeometryError(f"collar thickness {epsilon} exceeds the validated bound {eps0}")
    return Collar(chart, np.asarray(xi, dtype=float), float(epsilon), eps0)


@dataclass(frozen=True)
class CollarSamples:
    """Tensor-product nodes z = y - t xi over patch x (0, eps) with weights
    consistent with the area formula (surface measure times dt)."""

    points: np.ndarray
    t: np.ndarray
    boundary_points: np.ndarray
    weights: np.ndarray
    params: np.ndarray


def collar_volume_sample(collar: Collar, cells: int = 8, order: int = 4) -> CollarSamples:
    from .quadrature import surface_rule

    chart = collar.chart
    params, pts, wts = surface_rule(chart, chart.window, cells, order)
    tn, tw = gauss_segments(0.0, collar.epsilon, cells, order)
    xi_world = collar.xi_world
    m, k = pts.shape[0], tn.shape[0]
    boundary = np.repeat(pts, k, axis=0)
    t = np.tile(tn, m)
    nodes = boundary - t[:, None] * xi_world[None, :]
    weights = (wts[:, None] * tw[None, :]).ravel()
    return CollarSamples(nodes, t, boundary, weights, np.repeat(params, k, axis=0))
