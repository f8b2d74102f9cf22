import math

import numpy as np
import pytest

from bdtrace.fields import AffineField, ScalarTestFunction, bump
from bdtrace.quadrature import QuadratureSpec
from bdtrace.symtensor import frobenius
from bdtrace.trace import assemble_trace, averaged_trace, chart_trace_field, default_delta, trace_field
from bdtrace.verify import (
    CheckReport,
    collar_estimate_check,
    directional_ibp_residual,
    field_scale,
    ibp_residual,
    jump_reconstruction_check,
    strict_convergence_experiment,
    total_strain_variation,
    trace_norm_bound,
)

SPEC = QuadratureSpec(order=4, cells_per_axis=16, refinement_levels=1)

POLY_PHI = ScalarTestFunction(
    lambda p: p[..., 0] * p[..., 1] + 0.5 * p[..., 0] ** 2,
    lambda p: np.stack([p[..., 1] + p[..., 0], p[..., 0]], axis=-1), "poly")


def test_check_report_invariant():
    rep = CheckReport.from_residual("x", 0.5, 1.0)
    assert rep.passed
    rep = CheckReport.from_residual("x", 2.0, 1.0)
    assert not rep.passed


def test_ibp_rigid(square, rigid_field):
    scale = field_scale(rigid_field, square)
    res = frobenius(ibp_residual(rigid_field, square, POLY_PHI, SPEC))
    assert res <= 1e-6 * scale


def test_ibp_affine_flat_boundary(square, affine_field):
    res = frobenius(ibp_residual(affine_field, square, POLY_PHI, SPEC))
    assert res <= 1e-8


def test_ibp_jump_field(square, jump_affine):
    scale = field_scale(jump_affine, square)
    res = frobenius(ibp_residual(jump_affine, square, POLY_PHI, SPEC))
    assert res <= 1e-5 * scale


def test_ibp_sine_domain(sine_domain, trig_field):
    scale = field_scale(trig_field, sine_domain)
    res = frobenius(ibp_residual(trig_field, sine_domain, POLY_PHI, SPEC))
    assert res <= 1e-6 * scale


def test_directional_ibp_zero_field(square):
    zero = AffineField(b=np.zeros(2), matrix=np.zeros((2, 2)))
    top = square.charts[0]
    r = directional_ibp_residual(zero, square, top, bump((0.5, 1.0), 0.2), [0.0, 1.0], SPEC)
    assert r == 0.0


def test_directional_ibp_continuous(square, trig_field):
    top = square.charts[0]
    phi = bump((0.5, 1.0), 0.2)
    scale = field_scale(trig_field, square)
    r_en = directional_ibp_residual(trig_field, square, top, phi, [0.0, 1.0], SPEC)
    assert abs(r_en) <= 1e-4 * scale
    d = default_delta(top)
    xi = np.array([d, 1.0]) / math.sqrt(1.0 + d * d)
    r_xi = directional_ibp_residual(trig_field, square, top, phi, xi, SPEC)
    assert abs(r_xi) <= 1e-4 * scale
    r_asm = directional_ibp_residual(trig_field, square, top, phi, xi, SPEC,
                                     use_assembled=True)
    assert abs(r_asm - r_xi) <= 2e-4 * scale


def test_directional_ibp_rejects_leaky_phi(square, trig_field):
    top = square.charts[0]
    with pytest.raises(ValueError, match="vanish"):
        directional_ibp_residual(trig_field, square, top, bump((0.5, 1.0), 0.5),
                                 [0.0, 1.0], SPEC, depth=0.25)


def test_collar_estimate_all_fields(square, affine_field, trig_field, jump_affine):
    top = square.charts[0]
    d = default_delta(top)
    xi = np.array([d, 1.0]) / math.sqrt(1.0 + d * d)
    for f in (affine_field, trig_field, jump_affine):
        for direction in ([0.0, 1.0], xi):
            rep = collar_estimate_check(f, square, top, direction, SPEC)
            assert rep.passed, rep.details


def test_trace_norm_zero_field(square):
    zero = AffineField(b=np.zeros(2), matrix=np.zeros((2, 2)))
    rep = trace_norm_bound(zero, square, SPEC)
    assert rep.passed
    assert math.isnan(rep.details["ratio"])


def test_trace_norm_constant_field_ratio_four(square):
    # constant c on the unit square: boundary integral |c| * perimeter,
    # the natural norm |c| * area: the ratio is exactly 4
    const = AffineField(b=np.array([0.6, -0.8]), matrix=np.zeros((2, 2)))
    rep = trace_norm_bound(const, square, SPEC)
    assert rep.passed
    assert rep.details["ratio"] == pytest.approx(4.0, rel=1e-6)


def test_trace_norm_stability(square, trig_field):
    rep = trace_norm_bound(trig_field, square, SPEC)
    assert rep.passed
    assert np.isfinite(rep.details["ratio"])


def test_total_strain_variation_analytic(square, jump_constants):
    # |Eu|(square) = |(1,0) (.) e2| * length of the interface inside = 1/sqrt(2)
    tv = total_strain_variation(jump_constants, square, SPEC)
    assert tv == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)


def test_strict_convergence_constant(square):
    const = AffineField(b=np.array([1.0, 2.0]), matrix=np.zeros((2, 2)))
    rep = strict_convergence_experiment(const, square, [0.08, 0.04], SPEC)
    assert rep.passed
    rows = rep.details["rows"]
    assert all(r["l1"] < 1e-12 and r["tv_gap"] < 1e-12 for r in rows)


def test_strict_convergence_jump(square, jump_mild):
    rep = strict_convergence_experiment(jump_mild, square, [0.04, 0.02, 0.01], SPEC)
    assert rep.passed
    rows = rep.details["rows"]
    for key in ("l1", "tv_gap", "trace_gap"):
        seq = [r[key] for r in rows]
        assert all(b <= a + 1e-12 for a, b in zip(seq[:-1], seq[1:]))


def test_jump_reconstruction_smooth_field_vanishes(square, trig_field):
    from conftest import flat_interface

    iface = flat_interface()
    rep = jump_reconstruction_check(trig_field, iface, bump((0.5, 0.45), 0.3),
                                    square, SPEC)
    assert rep.passed
    assert rep.residual <= 1e-5


def test_jump_reconstruction_flat_analytic(square, jump_constants):
    phi = bump((0.5, 0.45), 0.3)
    rep = jump_reconstruction_check(jump_constants, jump_constants.interface, phi,
                                    square, SPEC)
    assert rep.passed
    recon = np.asarray(rep.details["reconstructed"])
    from bdtrace.quadrature import gauss_segments

    nodes, wts = gauss_segments(0.2, 0.8, 32, 4)
    pts = np.stack([nodes, np.full_like(nodes, 0.45)], axis=-1)
    mass = wts @ phi(pts)
    assert np.allclose(recon, [[0.0, 0.5 * mass], [0.5 * mass, 0.0]], atol=1e-6)


def test_jump_reconstruction_curved(square, jump_curved):
    scale = field_scale(jump_curved, square)
    rep = jump_reconstruction_check(jump_curved, jump_curved.interface,
                                    bump((0.5, 0.55), 0.3), square, SPEC)
    assert rep.passed
    assert rep.residual <= 1e-4 * scale


# -- uniqueness / linearity / chart-consistency surrogates --------------------


def test_uniqueness_surrogate_assembled_vs_averaged(square, trig_field):
    # two trace computations that both satisfy the identity agree node-wise
    tf = chart_trace_field(trig_field, square.charts[0], square, SPEC)
    for k in (3, 17, 31):
        avg = averaged_trace(trig_field, square, tf.points[k], chart=tf.chart)
        assert np.linalg.norm(avg.vector() - tf.gamma_world[k]) <= 2e-4


def test_linearity_surrogate(square, affine_field, trig_field):
    top = square.charts[0]
    y = np.array([0.45, 1.0])

    class Sum:
        dim = 2
        interface = None

        def _eval(self, pts):
            return affine_field._eval(pts) + trig_field._eval(pts)

    g_sum = assemble_trace(Sum(), top, square, y)
    g_a = assemble_trace(affine_field, top, square, y)
    g_t = assemble_trace(trig_field, top, square, y)
    assert np.allclose(g_sum, g_a + g_t, atol=2e-4)


def test_overlap_chart_consistency(square, trig_field):
    # the rotated extra chart describes part of the top edge in another frame;
    # traces computed in both charts agree at shared boundary points
    extra = square.extra_charts[0]
    top = square.charts[0]
    for x1 in (0.42, 0.5, 0.58):
        y = np.array([x1, 1.0])
        g_top = assemble_trace(trig_field, top, square, y) @ top.frame
        g_rot = assemble_trace(trig_field, extra, square, y) @ extra.frame
        assert np.allclose(g_top, g_rot, atol=2e-4)
