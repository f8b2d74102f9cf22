"""Randomized property sweeps over the algebra and the cone geometry.

Each sweep returns its worst observed violation (0.0 when clean) or smallest
observed gap, so callers can gate on a slack tolerance. Sweeps are
deterministic given the generator and vectorized over their sample axes.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import (
    GeometryError,
    _reparametrize_many,
    admissible_radius,
    cone_aperture,
    cone_beta,
    plane_basis,
    reparametrized_lipschitz,
)
from .symtensor import tri_norm, tri_outer

__all__ = [
    "sym_inequality_sweep",
    "zigzag_graph",
    "max_plane_graph",
    "cone_separation_sweep",
    "beta_inclusion_sweep",
    "reparametrized_lipschitz_sweep",
]


def sym_inequality_sweep(rng: np.random.Generator, dim: int, pairs: int,
                         slack: float = 1e-12) -> float:
    """Worst violation of |a (.) b| >= |a||b|/sqrt(2) over random pairs."""
    a = rng.uniform(-1.0, 1.0, size=(pairs, dim))
    b = rng.uniform(-1.0, 1.0, size=(pairs, dim))
    lhs = tri_norm(tri_outer(a, b), dim)
    rhs = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1) / math.sqrt(2.0)
    worst = float(np.max(rhs - lhs - slack))
    return max(0.0, worst)


def zigzag_graph(rng: np.random.Generator, lipschitz: float,
                 window: tuple[float, float] = (-1.0, 1.0), segments: int = 8):
    """Piecewise-linear graph with slopes +-L on random breakpoints (n=2)."""
    lo, hi = window
    breaks = np.sort(rng.uniform(lo, hi, size=segments - 1))
    edges = np.concatenate([[lo], breaks, [hi]])
    signs = rng.choice([-1.0, 1.0], size=segments)
    heights = [rng.uniform(-0.3, 0.3)]
    for k in range(segments):
        heights.append(heights[-1] + signs[k] * lipschitz * (edges[k + 1] - edges[k]))
    heights = np.array(heights)

    def graph(p):
        x = np.asarray(p, dtype=float)[..., 0]
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, segments - 1)
        return heights[idx] + signs[idx] * lipschitz * (x - edges[idx])

    return graph, tuple(float(b) for b in breaks)


def max_plane_graph(rng: np.random.Generator, lipschitz: float, planes: int = 4):
    """Piecewise-linear graph max_k L (u_k . x' + c_k) with |u_k| = 1 (n=3)."""
    us = rng.normal(size=(planes, 2))
    us /= np.linalg.norm(us, axis=1, keepdims=True)
    cs = rng.uniform(-0.3, 0.3, size=planes)

    def graph(p):
        x = np.asarray(p, dtype=float)
        vals = lipschitz * (x @ us.T + cs)
        return np.max(vals, axis=-1)

    return graph


def _sample_closed_cone(rng: np.random.Generator, count: int, dim: int,
                        lipschitz: float) -> np.ndarray:
    """Random unit directions in the closed transversal cone (rejection)."""
    alpha = cone_aperture(lipschitz)
    out = np.empty((0, dim))
    while out.shape[0] < count:
        z = rng.normal(size=(4 * count, dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        out = np.concatenate([out, z[np.abs(z[:, -1]) >= alpha]], axis=0)
    return out[:count]


def cone_separation_sweep(rng: np.random.Generator, lipschitz: float,
                          graphs: int = 5, samples: int = 200, dim: int = 2) -> float:
    """Smallest observed gap |x_n + t zeta_n - a(x' + t zeta')| over random
    graph points and cone directions; a positive return means no violation."""
    worst = np.inf
    for _ in range(graphs):
        if dim == 2:
            graph, _ = zigzag_graph(rng, lipschitz)
        else:
            graph = max_plane_graph(rng, lipschitz)
        xp = rng.uniform(-0.8, 0.8, size=(samples, dim - 1))
        x = np.concatenate([xp, graph(xp)[:, None]], axis=1)
        zeta = _sample_closed_cone(rng, samples, dim, lipschitz)
        t = rng.uniform(0.05, 0.5, size=samples) * rng.choice([-1.0, 1.0], size=samples)
        y = x + t[:, None] * zeta
        gaps = np.abs(y[:, -1] - graph(y[:, :-1]))
        worst = min(worst, float(np.min(gaps)))
    return worst


def _sample_admissible(rng: np.random.Generator, count: int, dim: int,
                       eta0: float) -> np.ndarray:
    en = np.zeros(dim)
    en[-1] = 1.0
    out = np.empty((0, dim))
    while out.shape[0] < count:
        z = rng.normal(size=(6 * count, dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        keep = np.linalg.norm(z - en, axis=1) < 0.95 * eta0
        out = np.concatenate([out, z[keep]], axis=0)
    return out[:count]


def beta_inclusion_sweep(rng: np.random.Generator, lipschitz: float,
                         samples: int = 1000, dim: int = 2) -> float:
    """Fraction of sub-cone samples that escape the transversal cone (0 = pass).

    Directions are sampled inside {|zeta . xi| > beta} for random admissible xi.
    """
    eta0 = admissible_radius(lipschitz)
    alpha = cone_aperture(lipschitz)
    xis = _sample_admissible(rng, samples, dim, eta0)
    betas = np.array([cone_beta(xi, lipschitz) for xi in xis])
    # |cos angle| > beta with a margin so rounding cannot blur the gate
    c = rng.uniform(betas + 1e-9, 1.0) * rng.choice([-1.0, 1.0], size=samples)
    zetas = np.empty_like(xis)
    for k, xi in enumerate(xis):
        perp = plane_basis(xi)
        w = rng.normal(size=dim - 1) if dim > 2 else rng.choice([-1.0, 1.0], size=1)
        w = w / np.linalg.norm(w)
        zetas[k] = c[k] * xi + math.sqrt(1.0 - c[k] * c[k]) * (w @ perp)
    inside = np.abs(zetas[:, -1]) > alpha * np.linalg.norm(zetas, axis=1) * (1 + 1e-15)
    return float(np.mean(~inside))


def reparametrized_lipschitz_sweep(rng: np.random.Generator, lipschitz: float,
                                   graphs: int = 3, directions: int = 4,
                                   pairs: int = 40, dim: int = 2,
                                   slack: float = 1e-9) -> float:
    """Worst excess of sampled difference quotients of the reparametrized
    graph over its guaranteed bound beta / sqrt(1 - beta^2)."""
    from .geometry import LipschitzGraphChart

    eta0 = admissible_radius(lipschitz)
    worst = 0.0
    for _ in range(graphs):
        if dim == 2:
            graph, kinks = zigzag_graph(rng, lipschitz)
            chart = LipschitzGraphChart(
                frame=np.eye(2), graph=graph, lipschitz_constant=lipschitz,
                window=((-0.9, 0.9),), outer_window=((-1.0, 1.0),), depth=1.0,
                kinks=(kinks,), name="sweep")
        else:
            graph = max_plane_graph(rng, lipschitz)
            chart = LipschitzGraphChart(
                frame=np.eye(3), graph=graph, lipschitz_constant=lipschitz,
                window=((-0.9, 0.9), (-0.9, 0.9)),
                outer_window=((-1.0, 1.0), (-1.0, 1.0)), depth=1.0, name="sweep")
        for xi in _sample_admissible(rng, directions, dim, eta0):
            bound = reparametrized_lipschitz(cone_beta(xi, lipschitz))
            perp = plane_basis(xi)
            c = rng.uniform(-0.3, 0.3, size=(2 * pairs, dim - 1))
            ys = c @ perp
            try:
                ts = _reparametrize_many(chart, xi, ys, check_window=False)
            except GeometryError:
                continue
            y1, y2 = ys[:pairs], ys[pairs:]
            t1, t2 = ts[:pairs], ts[pairs:]
            dy = np.linalg.norm(y1 - y2, axis=1)
            keep = dy > 1e-9
            if not np.any(keep):
                continue
            quotients = np.abs(t1[keep] - t2[keep]) / dy[keep]
            worst = max(worst, float(np.max(quotients - bound - slack)))
    return max(0.0, worst)
