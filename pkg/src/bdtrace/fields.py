"""Closed-form vector fields with integrable strain: smooth fields, rigid
motions, affine fields, piecewise fields with jumps across a rectifiable
interface, and mollified fields.

Evaluation is vectorized: fields map stacked point arrays (m, n) to (m, n)
values; strain rows use the upper-triangle layout of symtensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import symtensor as st
from .quadrature import Box, GraphBand, QuadratureSpec, gauss_segments, integrate_volume
from .symtensor import SkewTensor, SymTensor

__all__ = [
    "OnInterfaceError",
    "InterfacePiece",
    "Interface",
    "SmoothField",
    "RigidField",
    "AffineField",
    "PiecewiseField",
    "MollifiedField",
    "MeasureValue",
    "ScalarTestFunction",
    "bump",
    "eval_field",
    "strain_ac",
    "distributional_strain",
    "strain_measure",
    "mollify",
    "split_bands_at_interface",
]

ON_INTERFACE_TOL = 1e-12


class OnInterfaceError(ValueError):
    """Point sits on the interface; callers must use one-sided operations."""


# ----------------------------------------------------------------------------
# Interfaces: finitely many C^1 graph pieces with an oriented normal.


@dataclass(eq=False)
class InterfacePiece:
    """C^1 graph piece {y_n = g(y')} in an orthonormal frame with closed-form
    gradient; orientation picks the interface normal as +/- the graph normal
    (graph normal points to the above-graph side)."""

    frame: np.ndarray
    graph: Callable
    grad: Callable
    window: tuple[tuple[float, float], ...]
    orientation: int = 1
    name: str = ""
    # surface_rule compatibility: C^1 pieces carry no kinks
    kinks: tuple = ()

    def __post_init__(self):
        self.frame = np.asarray(self.frame, dtype=float)
        n = self.frame.shape[0]
        if float(np.max(np.abs(self.frame @ self.frame.T - np.eye(n)))) >= 1e-12:
            raise ValueError(f"interface piece {self.name!r}: frame is not orthonormal")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.window = tuple((float(lo), float(hi)) for lo, hi in self.window)

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @property
    def is_axis_aligned(self) -> bool:
        return bool(np.allclose(self.frame, np.eye(self.dim), atol=1e-14))

    def frame_coords(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.frame.T

    def graph_height(self, params) -> np.ndarray:
        return np.asarray(self.graph(np.asarray(params, dtype=float)), dtype=float)

    def surface_point(self, params) -> np.ndarray:
        p = np.atleast_2d(np.asarray(params, dtype=float))
        y = np.concatenate([p, self.graph_height(p)[:, None]], axis=1)
        out = y @ self.frame
        return out if np.asarray(params).ndim == 2 else out[0]

    def grad_g(self, params) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        return np.asarray(self.grad(p), dtype=float).reshape(p.shape)

    def area_weight(self, params) -> np.ndarray:
        g = self.grad_g(np.atleast_2d(np.asarray(params, dtype=float)))
        w = np.sqrt(1.0 + np.sum(g * g, axis=-1))
        return w if np.asarray(params).ndim == 2 else w[0]

    def graph_normal(self, params) -> np.ndarray:
        """Unit normal of the graph pointing to the above-graph side (world)."""
        p = np.atleast_2d(np.asarray(params, dtype=float))
        g = self.grad_g(p)
        nu = np.concatenate([-g, np.ones((p.shape[0], 1))], axis=1)
        nu = nu / np.linalg.norm(nu, axis=1, keepdims=True)
        out = nu @ self.frame
        return out if np.asarray(params).ndim == 2 else out[0]

    def oriented_normal(self, params) -> np.ndarray:
        return self.orientation * self.graph_normal(params)

    def signed_offset(self, x) -> np.ndarray:
        """y_n - g(y') in frame coordinates: positive above the graph."""
        y = np.atleast_2d(self.frame_coords(x))
        off = y[:, -1] - self.graph_height(y[:, :-1])
        return off if np.asarray(x).ndim == 2 else off[0]

    def covers(self, x) -> np.ndarray:
        y = np.atleast_2d(self.frame_coords(x))
        ok = np.ones(y.shape[0], dtype=bool)
        for k, (lo, hi) in enumerate(self.window):
            ok &= (y[:, k] >= lo) & (y[:, k] <= hi)
        return ok if np.asarray(x).ndim == 2 else bool(ok[0])


@dataclass(eq=False)
class Interface:
    """Finite union of pairwise disjoint C^1 graph pieces with oriented normals."""

    pieces: tuple[InterfacePiece, ...]

    def __post_init__(self):
        self.pieces = tuple(self.pieces)
        if not self.pieces:
            raise ValueError("an interface needs at least one piece")
        dims = {p.dim for p in self.pieces}
        if len(dims) != 1:
            raise ValueError("interface pieces must share one dimension")
        self._audit_disjoint()

    def _audit_disjoint(self):
        """Sampled pairwise-disjointness check for same-frame pieces with
        overlapping windows (graphs that touch are not disjoint)."""
        for i, a in enumerate(self.pieces):
            for b in self.pieces[i + 1:]:
                if not np.allclose(a.frame, b.frame, atol=1e-14):
                    continue
                lo = max(a.window[0][0], b.window[0][0])
                hi = min(a.window[0][1], b.window[0][1])
                if hi <= lo or a.dim != 2:
                    continue
                s = np.linspace(lo, hi, 257)[:, None]
                gap = np.min(np.abs(a.graph_height(s) - b.graph_height(s)))
                if gap <= 1e-12:
                    raise ValueError(
                        f"interface pieces {a.name!r} and {b.name!r} touch "
                        f"(sampled gap {gap:.2e}); pieces must be pairwise disjoint")

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    def flipped(self) -> "Interface":
        return Interface(tuple(
            InterfacePiece(p.frame, p.graph, p.grad, p.window, -p.orientation, p.name)
            for p in self.pieces
        ))

    def plus_side(self, x, strict: bool = False) -> np.ndarray:
        """True where x lies on the side the oriented normal points to.

        With strict=True, points within 1e-12 of a covering piece raise
        OnInterfaceError (the contract of public evaluation); otherwise ties
        are resolved by the sign of the offset, which is what quadrature
        internals need (such nodes carry negligible weight).
        """
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        side = np.zeros(pts.shape[0], dtype=bool)
        resolved = np.zeros(pts.shape[0], dtype=bool)
        for p in self.pieces:
            mask = p.covers(pts) & ~resolved
            if not np.any(mask):
                continue
            off = p.signed_offset(pts[mask])
            if strict and np.any(np.abs(off) <= ON_INTERFACE_TOL):
                raise OnInterfaceError(
                    "point lies on the interface; use one-sided operations"
                )
            side[mask] = (off > 0) if p.orientation == 1 else (off < 0)
            resolved[mask] = True
        if not np.all(resolved):
            raise ValueError("point is outside every interface piece's window")
        return side if np.asarray(x).ndim == 2 else bool(side[0])


# ----------------------------------------------------------------------------
# Field zoo.


class FieldBase:
    """Common evaluation/strain plumbing; subclasses define _eval and may
    provide closed-form strain rows via _strain_tri."""

    dim: int
    interface: Interface | None = None

    def __call__(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if pts.shape[-1] != self.dim:
            raise ValueError(f"dimension mismatch: field dim {self.dim}, point dim {pts.shape[-1]}")
        vals = self._eval_checked(pts)
        return vals if np.asarray(x).ndim == 2 else vals[0]

    def _eval_checked(self, pts: np.ndarray) -> np.ndarray:
        return self._eval(pts)

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def strain_tri(self, pts: np.ndarray) -> np.ndarray:
        """Rows of the absolutely continuous strain (upper-triangle layout)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        tri = self._strain_tri(pts)
        if tri is None:
            tri = self._fd_strain_tri(pts)
        return tri

    def _strain_tri(self, pts: np.ndarray):
        return None

    def _fd_strain_tri(self, pts: np.ndarray) -> np.ndarray:
        h = float(np.finfo(float).eps) ** (1.0 / 3.0)
        steps = h * (1.0 + np.linalg.norm(pts, axis=-1))
        n = self.dim
        jac = np.empty(pts.shape[:-1] + (n, n))
        for k in range(n):
            dp = np.zeros_like(pts)
            dp[..., k] = steps
            jac[..., :, k] = (self._eval(pts + dp) - self._eval(pts - dp)) / (2.0 * steps[..., None])
        return st.tri_from_matrices(jac)

    @property
    def strain_is_constant(self) -> bool:
        return False


@dataclass(eq=False)
class SmoothField(FieldBase):
    """Field given by a closed-form expression, optional closed-form strain."""

    func: Callable
    dim: int
    strain_func: Callable | None = None
    name: str = ""

    def _eval(self, pts):
        return np.asarray(self.func(pts), dtype=float)

    def _strain_tri(self, pts):
        if self.strain_func is None:
            return None
        return np.asarray(self.strain_func(pts), dtype=float)


@dataclass(eq=False)
class RigidField(FieldBase):
    """Rigid motion u(x) = A x + b with skew A; strain vanishes identically."""

    b: np.ndarray
    spin: SkewTensor

    def __post_init__(self):
        self.b = st.as_vector(self.b)
        if self.spin.dim != self.b.shape[0]:
            raise ValueError("dimension mismatch between translation and spin")
        self.dim = self.b.shape[0]
        self._mat = self.spin.to_matrix()

    def _eval(self, pts):
        return pts @ self._mat.T + self.b

    def _strain_tri(self, pts):
        return np.zeros(pts.shape[:-1] + (st.tri_size(self.dim),))

    @property
    def strain_is_constant(self) -> bool:
        return True


@dataclass(eq=False)
class AffineField(FieldBase):
    """Affine field u(x) = M x + b; strain is the constant symmetric part of M."""

    b: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        self.b = st.as_vector(self.b)
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.dim = self.b.shape[0]
        if self.matrix.shape != (self.dim, self.dim):
            raise ValueError("matrix shape must match the field dimension")
        self._tri = np.array(st.sym_part(self.matrix).entries)

    def _eval(self, pts):
        return pts @ self.matrix.T + self.b

    def _strain_tri(self, pts):
        return np.broadcast_to(self._tri, pts.shape[:-1] + (self._tri.shape[0],)).copy()

    @property
    def strain_is_constant(self) -> bool:
        return True


@dataclass(eq=False)
class PiecewiseField(FieldBase):
    """Field with one closed-form expression per side of an interface.

    plus is the value on the side the oriented interface normal points to.
    """

    plus: FieldBase
    minus: FieldBase
    interface: Interface

    def __post_init__(self):
        if self.plus.dim != self.minus.dim or self.plus.dim != self.interface.dim:
            raise ValueError("piecewise field parts must share one dimension")
        self.dim = self.plus.dim

    def _eval_checked(self, pts):
        self.interface.plus_side(pts, strict=True)
        return self._eval(pts)

    def _eval(self, pts):
        side = self.interface.plus_side(pts)
        out = np.empty_like(pts)
        if np.any(side):
            out[side] = self.plus._eval(pts[side])
        if np.any(~side):
            out[~side] = self.minus._eval(pts[~side])
        return out

    def _strain_tri(self, pts):
        side = self.interface.plus_side(pts)
        out = np.empty(pts.shape[:-1] + (st.tri_size(self.dim),))
        if np.any(side):
            out[side] = self.plus.strain_tri(pts[side])
        if np.any(~side):
            out[~side] = self.minus.strain_tri(pts[~side])
        return out

    def jump(self, params, piece: InterfacePiece) -> np.ndarray:
        """u_plus - u_minus evaluated on a piece's graph points."""
        pts = np.atleast_2d(piece.surface_point(params))
        return self.plus._eval(pts) - self.minus._eval(pts)

    @property
    def strain_is_constant(self) -> bool:
        return self.plus.strain_is_constant and self.minus.strain_is_constant


# ----------------------------------------------------------------------------
# Mollification.

_mollifier_norm_cache: dict[int, float] = {}


def _mollifier_profile(r2: np.ndarray) -> np.ndarray:
    """Unnormalized bump exp(-1/(1-|x|^2)) of the squared radius, 0 outside."""
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def mollifier_mass_constant(dim: int) -> float:
    """Normalization making the unit-radius bump integrate to one."""
    if dim not in _mollifier_norm_cache:
        nodes, wts = gauss_segments(0.0, 1.0, 64, 10)
        radial = float(np.sum(wts * nodes ** (dim - 1) * _mollifier_profile(nodes**2)))
        sphere = 2.0 * math.pi if dim == 2 else 4.0 * math.pi
        _mollifier_norm_cache[dim] = 1.0 / (sphere * radial)
    return _mollifier_norm_cache[dim]


def mollifier_value(z: np.ndarray, radius: float, dim: int) -> np.ndarray:
    """Scaled bump rho_r(z) = r^-n rho(z/r) with unit total mass."""
    r2 = np.sum((z / radius) ** 2, axis=-1)
    return mollifier_mass_constant(dim) * _mollifier_profile(r2) / radius**dim


@dataclass(eq=False)
class MollifiedField(FieldBase):
    """Convolution u_r = rho_r * u by quadrature over the mollifier ball.

    The strain applies the same convolution to the strain measure: the
    absolutely continuous part by a volume rule (split at the interface) and
    the jump part by a surface rule over the interface inside the ball.
    """

    base: FieldBase
    radius: float
    cells: int = 12
    order: int = 4

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("mollification radius must be positive")
        self.dim = self.base.dim
        nodes, wts = gauss_segments(-1.0, 1.0, self.cells, self.order)
        self._nodes1d = nodes
        self._wts1d = wts

    def _column_rule(self, x: np.ndarray):
        """Tensor rule over the cube [-r, r]^n centered at x, with the last
        axis split where an interface graph crosses so the integrand stays
        smooth per segment. Fully vectorized: every column carries two
        segments (one may be empty; zero-weight nodes are dropped)."""
        r = self.radius
        n = self.dim
        if n == 2:
            cols = (x[0] + r * self._nodes1d)[:, None]
            colw = r * self._wts1d
        else:
            g1, g2 = np.meshgrid(x[0] + r * self._nodes1d, x[1] + r * self._nodes1d, indexing="ij")
            w1, w2 = np.meshgrid(r * self._wts1d, r * self._wts1d, indexing="ij")
            cols = np.stack([g1.ravel(), g2.ravel()], axis=-1)
            colw = (w1 * w2).ravel()
        lo, hi = x[-1] - r, x[-1] + r
        split = _interface_split_heights(self.base.interface, cols, lo, hi)
        ref, refw = gauss_segments(0.0, 1.0, max(2, self.cells // 2), self.order)
        S = ref.shape[0]
        blocks = []
        for seg_lo, seg_hi in ((np.full_like(split, lo), split), (split, np.full_like(split, hi))):
            thick = np.maximum(seg_hi - seg_lo, 0.0)
            zn = seg_lo[:, None] + ref[None, :] * thick[:, None]
            pts = np.empty((cols.shape[0] * S, n))
            pts[:, :-1] = np.repeat(cols, S, axis=0)
            pts[:, -1] = zn.ravel()
            wts = ((colw * thick)[:, None] * refw[None, :]).ravel()
            keep = wts > 0.0
            blocks.append((pts[keep], wts[keep]))
        pts = np.concatenate([b[0] for b in blocks], axis=0)
        wts = np.concatenate([b[1] for b in blocks], axis=0)
        return pts, wts

    def eval_one(self, x: np.ndarray) -> np.ndarray:
        pts, wts = self._column_rule(x)
        rho = wts * mollifier_value(pts - x, self.radius, self.dim)
        vals = self.base._eval(pts)
        # normalize by the discrete mass so constants are reproduced exactly
        return (rho @ vals) / np.sum(rho)

    def _eval(self, pts):
        return np.stack([self.eval_one(p) for p in pts])

    def strain_one(self, x: np.ndarray) -> np.ndarray:
        pts, wts = self._column_rule(x)
        rho = wts * mollifier_value(pts - x, self.radius, self.dim)
        mass = np.sum(rho)
        tri = (rho @ self.base.strain_tri(pts)) / mass
        iface = self.base.interface
        if iface is not None and isinstance(self.base, PiecewiseField):
            for piece in iface.pieces:
                rule = _piece_rule_near(piece, x, self.radius, self.cells, self.order)
                if rule is None:
                    continue
                params, spts, swts = rule
                srho = mollifier_value(spts - x, self.radius, self.dim)
                jump = self.base.jump(params, piece)
                nu = piece.oriented_normal(params)
                tri = tri + ((swts * srho) @ st.tri_outer(jump, nu)) / mass
        return tri

    def _strain_tri(self, pts):
        return np.stack([self.strain_one(p) for p in pts])


def _interface_split_heights(interface: Interface | None, cols: np.ndarray,
                             lo: float, hi: float) -> np.ndarray:
    """Per transverse column, the interface height clamped into [lo, hi].

    Columns that miss every piece get the clamp lo (an empty first segment).
    Only axis-aligned pieces split columns; rotated pieces fall back to
    unsplit columns (lower quadrature order across the jump).
    """
    split = np.full(cols.shape[0], lo)
    if interface is None:
        return split
    for piece in interface.pieces:
        if not piece.is_axis_aligned:
            continue
        heights = piece.graph_height(cols)
        in_win = np.ones(cols.shape[0], dtype=bool)
        for k, (wlo, whi) in enumerate(piece.window):
            in_win &= (cols[:, k] >= wlo) & (cols[:, k] <= whi)
        use = in_win & (heights > lo) & (heights < hi)
        split = np.where(use, heights, split)
    return split


def _piece_window_near(piece: InterfacePiece, x: np.ndarray, radius: float,
                       probes: int = 128):
    """Parameter sub-intervals of a 1d piece within distance radius of x.

    Probing is localized to a few radii around the projection of x so small
    crossings are never stepped over.
    """
    if piece.dim != 2:
        # events on a 2d parameter window are resolved by masking instead
        return None
    lo, hi = piece.window[0]
    s_center = float(piece.frame_coords(x)[0])
    lo = max(lo, s_center - 4.0 * radius)
    hi = min(hi, s_center + 4.0 * radius)
    if hi <= lo:
        return []
    s = np.linspace(lo, hi, probes)
    d2 = np.sum((np.atleast_2d(piece.surface_point(s[:, None])) - x) ** 2, axis=1) - radius**2
    inside = d2 < 0
    if not np.any(inside):
        return []
    # refine each sign change by bisection
    edges = []
    for i in range(probes - 1):
        if inside[i] != inside[i + 1]:
            a, b = s[i], s[i + 1]
            for _ in range(60):
                mid = 0.5 * (a + b)
                dm = float(np.sum((piece.surface_point(np.array([[mid]]))[0] - x) ** 2) - radius**2)
                if (dm < 0) == bool(inside[i]):
                    a = mid
                else:
                    b = mid
            edges.append(0.5 * (a + b))
    bounds = [lo] + edges + [hi]
    intervals = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        midpt = piece.surface_point(np.array([[0.5 * (a + b)]]))[0]
        if float(np.sum((midpt - x) ** 2)) < radius**2:
            intervals.append((a, b))
    return intervals


def _piece_rule_near(piece: InterfacePiece, x: np.ndarray, radius: float,
                     cells: int, order: int):
    """Surface rule over the portion of a piece inside the ball B_radius(x)."""
    intervals = _piece_window_near(piece, x, radius)
    if intervals is None:
        from .quadrature import surface_rule
        params, pts, wts = surface_rule(piece, piece.window, cells, order)
        mask = np.sum((pts - x) ** 2, axis=1) < radius**2
        if not np.any(mask):
            return None
        return params[mask], pts[mask], wts[mask]
    if not intervals:
        return None
    ps, ws = [], []
    for a, b in intervals:
        nodes, wts = gauss_segments(a, b, cells, order)
        ps.append(nodes)
        ws.append(wts)
    params = np.concatenate(ps)[:, None]
    pw = np.concatenate(ws)
    pts = np.atleast_2d(piece.surface_point(params))
    wts = pw * piece.area_weight(params)
    return params, pts, wts


# ----------------------------------------------------------------------------
# Operation-style entry points.


def eval_field(field: FieldBase, x) -> np.ndarray:
    """Evaluate a field; raises OnInterfaceError for on-interface queries."""
    return field(x)


def strain_ac(field: FieldBase, x) -> SymTensor:
    """Absolutely continuous strain at a point off the interface."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    tri = field.strain_tri(pts)
    return st.sym_from_tri(tri[0], field.dim)


@dataclass(frozen=True)
class MeasureValue:
    """Action of the strain measure against a test function, decomposed."""

    ac_part: SymTensor
    jump_part: SymTensor

    @property
    def total(self) -> SymTensor:
        return self.ac_part + self.jump_part


@dataclass(eq=False)
class ScalarTestFunction:
    """Scalar C^1 test function with closed-form gradient."""

    func: Callable
    gradient: Callable
    name: str = ""

    def __call__(self, pts):
        return np.asarray(self.func(np.asarray(pts, dtype=float)), dtype=float)

    def grad(self, pts):
        return np.asarray(self.gradient(np.asarray(pts, dtype=float)), dtype=float)


def bump(center, radius: float, power: int = 6) -> ScalarTestFunction:
    """Compactly supported polynomial bump (1 - |x-c|^2/R^2)^power inside B_R(c)."""
    c = np.asarray(center, dtype=float)
    R2 = float(radius) ** 2

    def f(pts):
        q = 1.0 - np.sum((pts - c) ** 2, axis=-1) / R2
        return np.where(q > 0, q, 0.0) ** power

    def g(pts):
        q = 1.0 - np.sum((pts - c) ** 2, axis=-1) / R2
        fac = np.where(q > 0, q, 0.0) ** (power - 1)
        return (-2.0 * power / R2) * fac[..., None] * (pts - c)

    return ScalarTestFunction(f, g, name=f"bump(r={radius})")


def split_bands_at_interface(region, interface: Interface | None):
    """Split graph bands along axis-aligned interface graphs so integrands are
    smooth per sub-band. Bands and boxes in world coordinates."""
    bands = []
    items = region if isinstance(region, (list, tuple)) else [region]
    for item in items:
        if isinstance(item, Box):
            item = GraphBand(item.bounds[:-1], item.bounds[-1][0], item.bounds[-1][1])
        bands.append(item)
    if interface is None:
        return bands
    for piece in interface.pieces:
        if not piece.is_axis_aligned:
            continue
        g = piece.graph_height
        new_bands = []
        for band in bands:
            lo_f, hi_f = band.lower, band.upper

            def lo_v(p, lo_f=lo_f):
                return lo_f(p) if callable(lo_f) else np.full(p.shape[0], lo_f)

            def hi_v(p, hi_f=hi_f):
                return hi_f(p) if callable(hi_f) else np.full(p.shape[0], hi_f)

            def mid(p, lo_f=lo_f, hi_f=hi_f):
                return np.clip(g(p), lo_v(p, lo_f), hi_v(p, hi_f))

            new_bands.append(GraphBand(band.window, band.lower, mid, band.snap))
            new_bands.append(GraphBand(band.window, mid, band.upper, band.snap))
        bands = new_bands
    return bands


def _support_leak_check(phi: ScalarTestFunction, region, dim: int):
    """Sample the region's edge; compactly supported phi must vanish there."""
    items = region if isinstance(region, (list, tuple)) else [region]
    probes = []
    for item in items:
        if isinstance(item, Box):
            win, lo_f, hi_f = item.bounds[:-1], item.bounds[-1][0], item.bounds[-1][1]
        else:
            win, lo_f, hi_f = item.window, item.lower, item.upper
        axes = [np.linspace(lo, hi, 17) for lo, hi in win]
        grids = np.meshgrid(*axes, indexing="ij") if len(axes) > 1 else [axes[0]]
        params = np.stack([g.ravel() for g in grids], axis=-1)
        lo_v = lo_f(params) if callable(lo_f) else np.full(params.shape[0], lo_f)
        hi_v = hi_f(params) if callable(hi_f) else np.full(params.shape[0], hi_f)
        for heights in (lo_v, hi_v):
            probes.append(np.concatenate([params, heights[:, None]], axis=1))
        # lateral faces
        for k, (lo, hi) in enumerate(win):
            for val in (lo, hi):
                p = params.copy()
                p[:, k] = val
                mid_v = 0.5 * (lo_v + hi_v)
                probes.append(np.concatenate([p, mid_v[:, None]], axis=1))
    edge = np.concatenate(probes, axis=0)
    if float(np.max(np.abs(phi(edge)))) > 1e-10:
        raise ValueError("test function support leaks out of the region")


def distributional_strain(field: FieldBase, phi: ScalarTestFunction, region,
                          spec: QuadratureSpec = QuadratureSpec()) -> SymTensor:
    """Action of the distributional strain: -integral of u (.) grad(phi).

    phi must be compactly supported inside the region; this is the oracle the
    measure decomposition is checked against.
    """
    _support_leak_check(phi, region, field.dim)
    bands = split_bands_at_interface(region, field.interface)

    def integrand(pts):
        return st.tri_outer(field._eval(pts), phi.grad(pts))

    tri = integrate_volume(integrand, bands, spec).value
    return st.sym_from_tri(-tri, field.dim)


def strain_measure(field: FieldBase, phi: ScalarTestFunction, region,
                   spec: QuadratureSpec = QuadratureSpec()) -> MeasureValue:
    """Integral of phi against the strain measure, split into the absolutely
    continuous part and the declared jump part on the interface."""
    bands = split_bands_at_interface(region, field.interface)

    def ac_integrand(pts):
        return phi(pts)[:, None] * field.strain_tri(pts)

    ac = st.sym_from_tri(integrate_volume(ac_integrand, bands, spec).value, field.dim)
    jump_tri = np.zeros(st.tri_size(field.dim))
    if isinstance(field, PiecewiseField):
        from .quadrature import surface_rule

        for piece in field.interface.pieces:
            window = _clip_piece_window(piece, region)
            if window is None:
                continue
            params, pts, wts = surface_rule(piece, window, spec.cells_per_axis, spec.order)
            mask = _region_contains(region, pts)
            jump = field.jump(params, piece)
            nu = piece.oriented_normal(params)
            vals = phi(pts)[:, None] * st.tri_outer(jump, nu)
            jump_tri = jump_tri + (wts * mask) @ vals
    return MeasureValue(ac, st.sym_from_tri(jump_tri, field.dim))


def _clip_piece_window(piece: InterfacePiece, region):
    """Clip an axis-aligned piece's window to the region's footprint."""
    items = region if isinstance(region, (list, tuple)) else [region]
    if not piece.is_axis_aligned:
        return piece.window
    lo = np.array([w[0] for w in piece.window])
    hi = np.array([w[1] for w in piece.window])
    foot_lo = np.full_like(lo, np.inf)
    foot_hi = np.full_like(hi, -np.inf)
    for item in items:
        win = item.bounds[:-1] if isinstance(item, Box) else item.window
        foot_lo = np.minimum(foot_lo, [w[0] for w in win])
        foot_hi = np.maximum(foot_hi, [w[1] for w in win])
    lo = np.maximum(lo, foot_lo)
    hi = np.minimum(hi, foot_hi)
    if np.any(lo >= hi):
        return None
    return tuple((float(a), float(b)) for a, b in zip(lo, hi))


def _region_contains(region, pts):
    items = region if isinstance(region, (list, tuple)) else [region]
    inside = np.zeros(pts.shape[0], dtype=bool)
    for item in items:
        if isinstance(item, Box):
            win, lo_f, hi_f = item.bounds[:-1], item.bounds[-1][0], item.bounds[-1][1]
        else:
            win, lo_f, hi_f = item.window, item.lower, item.upper
        ok = np.ones(pts.shape[0], dtype=bool)
        for k, (lo, hi) in enumerate(win):
            ok &= (pts[:, k] >= lo - 1e-12) & (pts[:, k] <= hi + 1e-12)
        params = pts[:, :-1]
        lo_v = lo_f(params) if callable(lo_f) else lo_f
        hi_v = hi_f(params) if callable(hi_f) else hi_f
        ok &= (pts[:, -1] >= lo_v - 1e-12) & (pts[:, -1] <= hi_v + 1e-12)
        inside |= ok
    return inside.astype(float)


def mollify(field: FieldBase, radius: float, cells: int = 12, order: int = 4) -> MollifiedField:
    """Smooth approximant by convolution with a radial unit-mass bump."""
    return MollifiedField(field, float(radius), cells, order)
