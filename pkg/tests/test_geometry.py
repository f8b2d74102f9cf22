import math

import numpy as np
import pytest

from bdtrace.geometry import (
    area_weight,
    GeometryError,
    LipschitzGraphChart,
    admissible_radius,
    collar_volume_sample,
    cone_aperture,
    cone_beta,
    in_cone,
    make_collar,
    plane_basis,
    reparametrize,
    reparametrized_lipschitz,
)
from bdtrace.quadrature import gauss_segments
from bdtrace.sweeps import (
    beta_inclusion_sweep,
    cone_separation_sweep,
    reparametrized_lipschitz_sweep,
    zigzag_graph,
)


def test_cone_aperture_values():
    assert cone_aperture(0.0) == 0.0
    assert cone_aperture(1.0) == pytest.approx(1.0 / math.sqrt(2.0))
    assert cone_aperture(math.sqrt(3.0)) == pytest.approx(math.sqrt(3.0) / 2.0)
    with pytest.raises(ValueError):
        cone_aperture(-0.1)


def test_admissible_radius_values():
    assert admissible_radius(0.0) == pytest.approx(math.sqrt(2.0))
    assert admissible_radius(1.0) == pytest.approx(math.sqrt(2.0 - math.sqrt(2.0)))
    radii = [admissible_radius(L) for L in np.linspace(0.0, 50.0, 40)]
    assert all(b < a for a, b in zip(radii[:-1], radii[1:]))
    assert radii[-1] < 0.2


def test_in_cone_examples():
    assert in_cone([0.0, 1.0], 5.0)
    assert not in_cone([1.0, 0.0], 0.5)
    # exact boundary direction: strict inequality fails
    assert not in_cone(np.array([1.0, 1.0]) / math.sqrt(2.0), 1.0)
    with pytest.raises(ValueError):
        in_cone([0.0, 0.0], 1.0)


def test_cone_beta_values():
    assert cone_beta([0.0, 1.0], 0.0) == pytest.approx(0.5)
    c0 = 1.0 - 1.0 / math.sqrt(2.0)
    assert cone_beta([0.0, 1.0], 1.0) == pytest.approx((2.0 - c0 * c0) / 2.0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        L = rng.uniform(0.0, 3.0)
        eta0 = admissible_radius(L)
        xi = np.array([0.0, 1.0])
        xi[0] = rng.uniform(-0.6, 0.6) * eta0
        xi /= np.linalg.norm(xi)
        if not in_cone(xi, L):
            continue
        beta = cone_beta(xi, L)
        assert 0.0 < beta < 1.0
    with pytest.raises(GeometryError):
        cone_beta([1.0, 0.0], 1.0)


def _chart(graph, L, grad=None, kinks=(), window=((-1.0, 1.0),), outer=((-2.0, 2.0),)):
    return LipschitzGraphChart(frame=np.eye(2), graph=graph, grad=grad,
                               lipschitz_constant=L, window=window,
                               outer_window=outer, depth=1.0, kinks=kinks, name="t")


def test_chart_validation_errors():
    with pytest.raises(GeometryError, match="orthonormal"):
        LipschitzGraphChart(frame=np.array([[1.0, 0.1], [0.0, 1.0]]),
                            graph=lambda p: np.zeros(p.shape[0]), lipschitz_constant=0.0,
                            window=((0.0, 1.0),), outer_window=((-1.0, 2.0),))
    with pytest.raises(GeometryError, match="strictly inside"):
        LipschitzGraphChart(frame=np.eye(2), graph=lambda p: np.zeros(p.shape[0]),
                            lipschitz_constant=0.0, window=((0.0, 1.0),),
                            outer_window=((0.0, 1.0),))
    with pytest.raises(GeometryError, match="Lipschitz audit"):
        _chart(lambda p: np.sin(3.0 * p[:, 0]), L=1.0)  # true constant is 3


def test_reparametrize_along_graph_direction():
    ch = _chart(lambda p: np.sin(p[:, 0]), L=1.0)
    y = np.array([0.37, 0.0])
    assert reparametrize(ch, [0.0, 1.0], y) == pytest.approx(math.sin(0.37), abs=1e-12)


def test_reparametrize_flat_graph():
    # for the flat graph the height over the tilted hyperplane is the linear
    # map t(y) = -y2 xi1 / xi2 (zero exactly when xi is the graph direction)
    ch = _chart(lambda p: np.zeros(p.shape[0]), L=0.0)
    assert reparametrize(ch, [0.0, 1.0], np.array([0.4, 0.0])) == pytest.approx(0.0, abs=1e-12)
    for theta in (-0.5, 0.2, 0.6):
        xi = np.array([math.sin(theta), math.cos(theta)])
        y = 0.4 * np.array([-xi[1], xi[0]])
        assert reparametrize(ch, xi, y) == pytest.approx(-y[1] / xi[1], abs=1e-12)


def test_reparametrize_line_closed_form():
    ch = _chart(lambda p: 0.5 * p[:, 0], L=0.5,
                grad=lambda p: np.full_like(p, 0.5))
    theta = 0.25
    xi = np.array([math.sin(theta), math.cos(theta)])
    y = 0.3 * np.array([-xi[1], xi[0]])
    t = reparametrize(ch, xi, y)
    t_exact = (y[0] / 2.0 - y[1]) / (xi[1] - xi[0] / 2.0)
    assert t == pytest.approx(t_exact, abs=1e-12)


def test_reparametrize_rejects_bad_direction():
    ch = _chart(lambda p: np.zeros(p.shape[0]), L=0.0)
    with pytest.raises(GeometryError):
        reparametrize(ch, [1.0, 0.0], np.array([0.0, 0.3]))


def test_reparametrize_rejects_point_outside_patch():
    ch = _chart(lambda p: np.zeros(p.shape[0]), L=0.0)
    with pytest.raises(GeometryError):
        reparametrize(ch, [0.0, 1.0], np.array([5.0, 0.0]))


def test_reparametrized_lipschitz_bound_sampled():
    rng = np.random.default_rng(11)
    excess = reparametrized_lipschitz_sweep(rng, 1.0, graphs=2, directions=3, pairs=20)
    assert excess == 0.0


def test_area_weight():
    flat = _chart(lambda p: np.zeros(p.shape[0]), L=0.0)
    assert flat.area_weight(np.array([[0.3]]))[0] == pytest.approx(1.0)
    assert area_weight(flat, [0.3]) == pytest.approx(1.0)
    slope = _chart(lambda p: 0.7 * p[:, 0], L=0.7, grad=lambda p: np.full_like(p, 0.7))
    assert slope.area_weight(np.array([[0.1]]))[0] == pytest.approx(math.sqrt(1.49))
    # finite differences fall back when no closed-form gradient is given
    fd = _chart(lambda p: 0.7 * p[:, 0], L=0.7)
    assert fd.area_weight(np.array([[0.1]]))[0] == pytest.approx(math.sqrt(1.49), abs=1e-9)
    rng = np.random.default_rng(0)
    g, kinks = zigzag_graph(rng, 1.5)
    zig = _chart(g, L=1.5, kinks=(kinks,))
    assert np.all(zig.area_weight(rng.uniform(-1, 1, size=(30, 1))) >= 1.0)


def test_collar_validation(square):
    top = square.charts[0]
    col = make_collar(top, [0.0, 1.0], square)
    assert col.epsilon0 > 0.05
    with pytest.raises(GeometryError):
        make_collar(top, [0.0, 1.0], square, epsilon=col.epsilon0 * 1.5)
    with pytest.raises(GeometryError):
        make_collar(top, [1.0, 0.0], square)


def test_collar_samples_stay_near_boundary(square):
    top = square.charts[0]
    col = make_collar(top, [0.0, 1.0], square, epsilon=0.01)
    cs = collar_volume_sample(col, cells=4)
    dist = np.abs(cs.points[:, 1] - 1.0)
    assert np.all(dist < 0.01)
    assert np.all(square.contains(cs.points))


def test_collar_product_structure(square):
    top = square.charts[0]
    col = make_collar(top, [0.0, 1.0], square, epsilon=0.02)
    cs = collar_volume_sample(col, cells=3)
    # flat boundary, graph-direction collar: product grid of surface x t nodes
    xs = np.unique(np.round(cs.points[:, 0], 12))
    ts = np.unique(np.round(cs.t, 12))
    assert xs.size * ts.size == cs.points.shape[0]


def test_collar_total_weight_straight_line_analytic(square):
    # boundary x2 = m x1: total weight = eps * patch area = eps * W sqrt(1+m^2)
    m = 0.5
    ch = _chart(lambda p: m * p[:, 0], L=0.5, grad=lambda p: np.full_like(p, m))
    dom_band = __import__("bdtrace.quadrature", fromlist=["GraphBand"]).GraphBand(
        ((-1.5, 1.5),), -3.0, lambda p: m * p[:, 0])
    from bdtrace.geometry import Domain

    dom = Domain(2, (dom_band,), (ch,))
    theta = 0.2
    xi = np.array([math.sin(theta), math.cos(theta)])
    col = make_collar(ch, xi, dom, epsilon=0.05)
    cs = collar_volume_sample(col, cells=8)
    expected = 0.05 * 2.0 * math.sqrt(1.0 + m * m)
    assert cs.weights.sum() == pytest.approx(expected, rel=1e-12)


def test_collar_weight_against_reparametrized_oracle(square):
    # independent route: thickness x area of the patch computed through the
    # xi-reparametrized graph (bisection heights + finite-difference slopes)
    ch = _chart(lambda p: 0.25 * np.sin(2.0 * p[:, 0]), L=0.5,
                grad=lambda p: 0.5 * np.cos(2.0 * p[:, 0])[:, None])
    from bdtrace.geometry import Domain
    from bdtrace.quadrature import GraphBand

    dom = Domain(2, (GraphBand(((-1.5, 1.5),), -3.0,
                               lambda p: 0.25 * np.sin(2.0 * p[:, 0])),), (ch,))
    theta = 0.15
    xi = np.array([math.sin(theta), math.cos(theta)])
    col = make_collar(ch, xi, dom, epsilon=0.04)
    cs = collar_volume_sample(col, cells=16)

    # patch endpoints project monotonically onto the xi-orthogonal line
    perp = plane_basis(xi)[0]
    ends = np.array([ch.surface_point(np.array([[w]]))[0] for w in ch.window[0]])
    w_lo, w_hi = sorted(float(e @ perp) for e in ends)
    nodes, wts = gauss_segments(w_lo, w_hi, 64, 4)
    heights = np.array([reparametrize(ch, xi, w * perp) for w in nodes])
    h = 1e-6
    slopes = (np.array([reparametrize(ch, xi, (w + h) * perp) for w in nodes]) -
              np.array([reparametrize(ch, xi, (w - h) * perp) for w in nodes])) / (2 * h)
    area = float(wts @ np.sqrt(1.0 + slopes**2))
    assert cs.weights.sum() == pytest.approx(col.epsilon * area, rel=1e-6)


def test_cone_separation_thousand_graphs():
    # 250 random piecewise-linear graphs per Lipschitz constant (1000 total)
    rng = np.random.default_rng(404)
    for L in (0.25, 0.5, 1.0, 2.0):
        assert cone_separation_sweep(rng, L, graphs=250, samples=8) > 1e-12


def test_cone_sweeps_clean():
    rng = np.random.default_rng(5)
    assert cone_separation_sweep(rng, 1.0, graphs=3, samples=60) > 1e-12
    assert beta_inclusion_sweep(rng, 1.0, samples=200) == 0.0
    assert cone_separation_sweep(rng, 0.5, graphs=1, samples=30, dim=3) > 1e-12


def test_reparametrized_lipschitz_constant_helper():
    assert reparametrized_lipschitz(0.5) == pytest.approx(0.5 / math.sqrt(0.75))
