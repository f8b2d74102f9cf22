"""Reference domains with complete boundary atlases.

Square-type domains are tiled by four side charts plus four corner charts in
rotated frames: a right-angle corner is the graph of w -> h_c - |w - w_c| in
the frame spanned by the exterior bisector, and a corner with one curved arm
root-finds that arm in the rotated frame. Side and corner windows meet
exactly, so the patches tile the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Domain, LipschitzGraphChart
from .quadrature import GraphBand

__all__ = [
    "unit_square_domain",
    "sine_graph_domain",
    "CORNER_ARC",
]

# Arc half-length covered by each corner chart along either arm.
CORNER_ARC = 0.08
_OUTER_PAD = 0.04


def _line_chart(frame, height, window, name, depth=0.4, pad=0.05):
    lo, hi = window
    return LipschitzGraphChart(
        frame=np.asarray(frame, dtype=float),
        graph=lambda p, h=height: np.full(p.shape[0], float(h)),
        grad=lambda p: np.zeros_like(p),
        lipschitz_constant=0.0,
        window=((lo, hi),),
        outer_window=((lo - pad, hi + pad),),
        depth=depth,
        name=name,
    )


def _right_corner_chart(corner, arm1, arm2, name, arc=CORNER_ARC, depth=0.4):
    """Chart for a right-angle corner with straight arms (unit directions
    pointing away from the corner along the boundary)."""
    t1 = np.asarray(arm1, dtype=float)
    t2 = np.asarray(arm2, dtype=float)
    f2 = -(t1 + t2)
    f2 = f2 / np.linalg.norm(f2)
    f1 = np.array([f2[1], -f2[0]])
    frame = np.stack([f1, f2])
    c = np.asarray(corner, dtype=float)
    w_c = float(frame[0] @ c)
    h_c = float(frame[1] @ c)
    half = arc / math.sqrt(2.0)

    def graph(p):
        return h_c - np.abs(p[..., 0] - w_c)

    return LipschitzGraphChart(
        frame=frame,
        graph=graph,
        lipschitz_constant=1.0,
        window=((w_c - half, w_c + half),),
        outer_window=((w_c - half - _OUTER_PAD / math.sqrt(2.0),
                       w_c + half + _OUTER_PAD / math.sqrt(2.0)),),
        depth=depth,
        kinks=((w_c,),),
        name=name,
    )


def _curved_corner_chart(corner, line_dir, curve, curve_grad, curve_sign,
                         lipschitz, name, arc=CORNER_ARC, depth=0.4):
    """Chart for a right-angle corner between a straight arm and a graph arm.

    curve is a standard-frame graph x2 = curve(x1) with zero slope at the
    corner; curve_sign is +1 when the curved arm leaves the corner toward
    increasing x1, else -1. The rotated graph height over the curve side is
    root-found per parameter (monotone offset along the frame direction).
    """
    c = np.asarray(corner, dtype=float)
    t_line = np.asarray(line_dir, dtype=float)
    t_curve = np.array([float(curve_sign), 0.0])
    f2 = -(t_line + t_curve)
    f2 = f2 / np.linalg.norm(f2)
    f1 = np.array([f2[1], -f2[0]])
    frame = np.stack([f1, f2])
    w_c = float(f1 @ c)
    h_c = float(f2 @ c)
    curve_side = 1.0 if float(f1 @ t_curve) > 0 else -1.0
    line_slope = float(f2 @ t_line) / float(f1 @ t_line)

    def graph(p):
        w = np.asarray(p, dtype=float)[..., 0]
        out = np.empty_like(w)
        rel = w - w_c
        on_line = (rel * curve_side) < 0
        out[on_line] = h_c + rel[on_line] * line_slope
        wc = w[~on_line]
        if wc.size:
            # world point of (w, h) is w f1 + h f2; solve x2 - curve(x1) = 0 in h
            lo = np.full(wc.shape, h_c - 0.6)
            hi = np.full(wc.shape, h_c + 0.6)

            def gap(h):
                x1 = wc * f1[0] + h * f2[0]
                x2 = wc * f1[1] + h * f2[1]
                return x2 - curve(x1)

            increasing = f2[1] > 0
            g_lo, g_hi = gap(lo), gap(hi)
            if increasing and (np.any(g_lo >= 0) or np.any(g_hi <= 0)):
                raise RuntimeError("corner chart: curved arm does not bracket")
            if not increasing and (np.any(g_lo <= 0) or np.any(g_hi >= 0)):
                raise RuntimeError("corner chart: curved arm does not bracket")
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                g = gap(mid)
                below = g < 0 if increasing else g > 0
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out[~on_line] = 0.5 * (lo + hi)
        return out

    half = arc / math.sqrt(2.0)
    return LipschitzGraphChart(
        frame=frame,
        graph=graph,
        lipschitz_constant=lipschitz,
        window=((w_c - half, w_c + half),),
        outer_window=((w_c - half - _OUTER_PAD / math.sqrt(2.0),
                       w_c + half + _OUTER_PAD / math.sqrt(2.0)),),
        depth=depth,
        kinks=((w_c,),),
        name=name,
    )


def unit_square_domain(arc: float = CORNER_ARC) -> Domain:
    """Unit square (0,1)^2: four side charts plus four corner charts."""
    m = arc
    charts = [
        LipschitzGraphChart(
            frame=np.eye(2),
            graph=lambda p: np.ones(p.shape[0]),
            grad=lambda p: np.zeros_like(p),
            lipschitz_constant=0.0,
            window=((m, 1.0 - m),),
            outer_window=((m - 0.05, 1.0 - m + 0.05),),
            depth=0.4,
            name="top",
        ),
        # bottom: frame (-e1, -e2), boundary at height 0 in frame coords
        _line_chart([[-1.0, 0.0], [0.0, -1.0]], 0.0, (-(1.0 - m), -m), "bottom"),
        # left: frame (e2, -e1)
        _line_chart([[0.0, 1.0], [-1.0, 0.0]], 0.0, (m, 1.0 - m), "left"),
        # right: frame (e2, e1), boundary at height 1
        _line_chart([[0.0, 1.0], [1.0, 0.0]], 1.0, (m, 1.0 - m), "right"),
        _right_corner_chart((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), "corner-00", arc),
        _right_corner_chart((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), "corner-10", arc),
        _right_corner_chart((1.0, 1.0), (-1.0, 0.0), (0.0, -1.0), "corner-11", arc),
        _right_corner_chart((0.0, 1.0), (1.0, 0.0), (0.0, -1.0), "corner-01", arc),
    ]
    bands = (GraphBand(((0.0, 1.0),), 0.0, 1.0),)
    # Extra rotated chart over part of the top edge, for overlap-consistency checks.
    ang = 0.3
    rot = np.array([[math.cos(ang), math.sin(ang)], [-math.sin(ang), math.cos(ang)]])
    frame = np.stack([rot @ np.array([1.0, 0.0]), rot @ np.array([0.0, 1.0])])
    f1, f2 = frame[0], frame[1]

    def tilted_top(p):
        # boundary {x2 = 1}: height h over w solves (w f1 + h f2) . e2 = 1
        return (1.0 - p[..., 0] * f1[1]) / f2[1]

    w_lo = float(np.array([0.35, 1.0]) @ f1)
    w_hi = float(np.array([0.65, 1.0]) @ f1)
    extra = LipschitzGraphChart(
        frame=frame,
        graph=tilted_top,
        grad=lambda p, s=-f1[1] / f2[1]: np.full_like(p, s),
        lipschitz_constant=abs(f1[1] / f2[1]) + 1e-9,
        window=((w_lo, w_hi),),
        outer_window=((w_lo - 0.05, w_hi + 0.05),),
        depth=0.3,
        name="top-rotated",
    )
    return Domain(2, bands, tuple(charts), extra_charts=(extra,), name="unit-square")


def sine_graph_domain(amplitude: float = 0.2, frequency: float = 3.0,
                      floor: float = -1.0, arc: float = CORNER_ARC) -> Domain:
    """Domain below the graph x2 = amplitude sin(frequency x1).

    The window [pi/6, 5pi/6] starts and ends where the slope vanishes, so the
    graph meets the vertical sides at right angles; the boundary closes with a
    flat floor. Lipschitz constant of the top graph: amplitude * frequency.
    """
    if not (amplitude == 0.2 and frequency == 3.0):
        # windows below are tuned to the zero-slope endpoints of this family
        raise ValueError("supported parameters: amplitude=0.2, frequency=3.0")
    x_lo, x_hi = math.pi / 6.0, 5.0 * math.pi / 6.0
    L_top = amplitude * frequency

    def a_top(p):
        return amplitude * np.sin(frequency * p[..., 0])

    def grad_top(p):
        return amplitude * frequency * np.cos(frequency * p[..., 0])[..., None]

    def curve(x1):
        return amplitude * np.sin(frequency * x1)

    def curve_grad(x1):
        return amplitude * frequency * np.cos(frequency * x1)

    h_end = amplitude  # graph height at both window endpoints (slope zero)
    m = arc

    tl = _curved_corner_chart((x_lo, h_end), (0.0, -1.0), curve, curve_grad,
                              +1, 1.6, "corner-tl", arc)
    tr = _curved_corner_chart((x_hi, h_end), (0.0, -1.0), curve, curve_grad,
                              -1, 1.6, "corner-tr", arc)

    # Top-chart window endpoints: world x1 of the curved-arm caps of the corners.
    def _cap_x1(chart, w_edge):
        h = float(chart.graph_height(np.array([[w_edge]]))[0])
        return float((np.array([w_edge, h]) @ chart.frame)[0])

    # The curved arm of tl runs toward +x1 (its cap is the larger x1), tr mirrors.
    top_lo = max(_cap_x1(tl, tl.window[0][0]), _cap_x1(tl, tl.window[0][1]))
    top_hi = min(_cap_x1(tr, tr.window[0][0]), _cap_x1(tr, tr.window[0][1]))

    top = LipschitzGraphChart(
        frame=np.eye(2),
        graph=a_top,
        grad=grad_top,
        lipschitz_constant=L_top,
        window=((top_lo, top_hi),),
        outer_window=((top_lo - 0.05, top_hi + 0.05),),
        depth=0.5,
        name="top",
    )

    bl = _right_corner_chart((x_lo, floor), (1.0, 0.0), (0.0, 1.0), "corner-bl", arc)
    br = _right_corner_chart((x_hi, floor), (-1.0, 0.0), (0.0, 1.0), "corner-br", arc)

    left = _line_chart([[0.0, 1.0], [-1.0, 0.0]], -x_lo, (floor + m, h_end - m), "left")
    right = _line_chart([[0.0, 1.0], [1.0, 0.0]], x_hi, (floor + m, h_end - m), "right")
    bottom = _line_chart([[-1.0, 0.0], [0.0, -1.0]], -floor, (-(x_hi - m), -(x_lo + m)), "bottom")

    bands = (GraphBand(((x_lo, x_hi),), floor, lambda p: a_top(p)),)
    charts = (top, bottom, left, right, tl, tr, bl, br)
    return Domain(2, bands, charts, name="sine-graph")
