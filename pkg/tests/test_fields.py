import numpy as np
import pytest

from bdtrace.fields import (
    AffineField,
    Interface,
    InterfacePiece,
    OnInterfaceError,
    PiecewiseField,
    RigidField,
    ScalarTestFunction,
    SmoothField,
    bump,
    distributional_strain,
    eval_field,
    mollifier_value,
    mollify,
    strain_ac,
    strain_measure,
)
from bdtrace.quadrature import Box, QuadratureSpec, gauss_segments, integrate_volume
from bdtrace.symtensor import SkewTensor, frobenius, sym_outer, sym_part

from conftest import flat_interface

SPEC = QuadratureSpec(order=4, cells_per_axis=16, refinement_levels=2)
SQUARE = [Box(((0.0, 1.0), (0.0, 1.0)))]


def test_interface_disjointness_audit():
    def g1(p):
        return np.full(p.shape[0], 0.3)

    def g2(p):
        return 0.3 + 0.1 * np.sin(p[..., 0])  # touches g1 at x1 = 0

    p1 = InterfacePiece(frame=np.eye(2), graph=g1, grad=lambda p: np.zeros_like(p),
                        window=((-1.0, 1.0),), name="a")
    p2 = InterfacePiece(frame=np.eye(2), graph=g2,
                        grad=lambda p: 0.1 * np.cos(p[..., 0])[..., None],
                        window=((-1.0, 1.0),), name="b")
    with pytest.raises(ValueError, match="disjoint"):
        Interface((p1, p2))


def test_rigid_eval_example():
    u = RigidField(b=np.zeros(2), spin=SkewTensor(2, (-1.0,)))
    assert np.allclose(eval_field(u, [1.0, 0.0]), [0.0, 1.0])


def test_piecewise_constant_eval_example(jump_constants):
    assert np.allclose(eval_field(jump_constants, [0.3, 0.5]), [1.0, 0.0])
    assert np.allclose(eval_field(jump_constants, [0.3, 0.2]), [0.0, 0.0])


def test_on_interface_query_errors(jump_constants):
    with pytest.raises(OnInterfaceError):
        eval_field(jump_constants, [0.3, 0.45])


def test_outside_interface_window_errors(jump_constants):
    with pytest.raises(ValueError):
        eval_field(jump_constants, [3.0, 0.5])


def test_strain_examples():
    rig = RigidField(b=np.array([1.0, 2.0]), spin=SkewTensor(2, (0.3,)))
    assert frobenius(strain_ac(rig, [0.4, 0.7])) == 0.0
    m = np.array([[0.2, 1.0], [0.0, -0.5]])
    aff = AffineField(b=np.zeros(2), matrix=m)
    assert np.allclose(strain_ac(aff, [0.1, 0.9]).to_matrix(), sym_part(m).to_matrix())
    sq = SmoothField(func=lambda p: np.stack([p[..., 0] ** 2, np.zeros(p[..., 0].shape)], axis=-1), dim=2)
    assert np.allclose(strain_ac(sq, [0.3, 0.1]).to_matrix(), [[0.6, 0.0], [0.0, 0.0]],
                       atol=1e-8)


def test_closed_form_strain_matches_finite_differences(trig_field):
    rng = np.random.default_rng(2)
    pts = rng.uniform(0.1, 0.9, size=(100, 2))
    cf = trig_field.strain_tri(pts)
    fd = trig_field._fd_strain_tri(pts)
    scale = 1.0 + np.abs(cf)
    assert np.all(np.abs(cf - fd) <= 1e-6 * scale)


def test_distributional_strain_rigid_annihilation():
    rig = RigidField(b=np.array([0.5, -1.0]), spin=SkewTensor(2, (0.8,)))
    for center, radius in (((0.5, 0.5), 0.4), ((0.42, 0.55), 0.35)):
        phi = bump(center, radius, power=8)
        ds = distributional_strain(rig, phi, SQUARE, SPEC)
        assert frobenius(ds) <= 1e-10


def test_distributional_strain_affine():
    m = np.array([[0.4, -0.1], [0.3, 0.2]])
    aff = AffineField(b=np.array([1.0, 0.0]), matrix=m)
    phi = bump((0.5, 0.5), 0.4)
    mass = integrate_volume(lambda p: phi(p), SQUARE, SPEC).value
    ds = distributional_strain(aff, phi, SQUARE, SPEC)
    assert np.allclose(ds.to_matrix(), sym_part(m).to_matrix() * mass, atol=1e-10)


def test_distributional_strain_jump_surface_oracle(jump_constants):
    # independent surface quadrature of phi against the jump density
    phi = bump((0.5, 0.45), 0.3)
    nodes, wts = gauss_segments(0.2, 0.8, 32, 4)
    pts = np.stack([nodes, np.full_like(nodes, 0.45)], axis=-1)
    expected = (wts @ phi(pts)) * sym_outer([1.0, 0.0], [0.0, 1.0]).to_matrix()
    ds = distributional_strain(jump_constants, phi, SQUARE, SPEC)
    assert np.allclose(ds.to_matrix(), expected, atol=1e-9)


def test_support_leakage_detected():
    aff = AffineField(b=np.zeros(2), matrix=np.eye(2))
    phi = bump((0.9, 0.9), 0.4)  # sticks out of the unit square
    with pytest.raises(ValueError, match="support"):
        distributional_strain(aff, phi, SQUARE, SPEC)


def test_strain_measure_smooth_has_no_jump(trig_field):
    phi = bump((0.5, 0.5), 0.3)
    mv = strain_measure(trig_field, phi, SQUARE, SPEC)
    assert frobenius(mv.jump_part) == 0.0
    assert np.allclose(mv.total.to_matrix(), (mv.ac_part + mv.jump_part).to_matrix())


def test_strain_measure_unit_jump_length():
    # piecewise constants, phi == 1: jump part is (c+ - c-) (.) e2 times |Gamma|
    iface = flat_interface(height=0.5)
    uj = PiecewiseField(AffineField(b=np.array([1.0, 0.0]), matrix=np.zeros((2, 2))),
                        AffineField(b=np.array([0.0, 0.0]), matrix=np.zeros((2, 2))),
                        iface)
    one = ScalarTestFunction(lambda p: np.ones(p.shape[:-1]), lambda p: np.zeros_like(p))
    mv = strain_measure(uj, one, SQUARE, SPEC)
    assert np.allclose(mv.jump_part.to_matrix(), [[0.0, 0.5], [0.5, 0.0]], atol=1e-12)
    assert frobenius(mv.ac_part) == 0.0


def test_measure_total_matches_distributional(jump_affine):
    phi = bump((0.5, 0.5), 0.45)
    mv = strain_measure(jump_affine, phi, SQUARE, SPEC)
    ds = distributional_strain(jump_affine, phi, SQUARE, SPEC)
    assert frobenius(mv.total - ds) <= 1e-6


def test_mollify_constant_and_affine():
    const = AffineField(b=np.array([2.0, 3.0]), matrix=np.zeros((2, 2)))
    assert np.allclose(mollify(const, 0.07)([0.4, 0.6]), [2.0, 3.0], atol=1e-13)
    aff = AffineField(b=np.array([0.3, -0.1]), matrix=np.array([[0.2, 0.4], [-0.3, 0.1]]))
    x = np.array([0.5, 0.5])
    assert np.allclose(mollify(aff, 0.05)(x), aff(x), atol=1e-13)


def test_mollify_jump_transition_profile(jump_constants):
    ur = mollify(jump_constants, 0.05)
    heights = np.linspace(0.38, 0.52, 13)
    prof = np.array([ur([0.5, h])[0] for h in heights])
    assert np.all(np.diff(prof) >= -1e-12)
    assert prof[0] == pytest.approx(0.0, abs=1e-13)
    assert prof[-1] == pytest.approx(1.0, abs=1e-13)
    # transition confined to a band of width 2r around the interface
    assert ur([0.5, 0.3999])[0] == pytest.approx(0.0, abs=1e-13)
    assert ur([0.5, 0.5001])[0] == pytest.approx(1.0, abs=1e-13)


def test_mollify_validates_radius(jump_constants):
    with pytest.raises(ValueError):
        mollify(jump_constants, 0.0)


def test_mollified_eval_near_domain_edge_fails(jump_constants):
    # the interface windows end at x1 = +-0.5 beyond the square; a ball that
    # reaches past them cannot classify all its nodes
    ur = mollify(jump_constants, 0.2)
    with pytest.raises(ValueError):
        ur([-0.45, 0.45])


def test_mollifier_unit_mass():
    nodes, wts = gauss_segments(-1.0, 1.0, 48, 6)
    g1, g2 = np.meshgrid(nodes, nodes, indexing="ij")
    pts = np.stack([g1.ravel(), g2.ravel()], axis=-1)
    w = np.outer(wts, wts).ravel()
    mass = w @ mollifier_value(pts, 1.0, 2)
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_mollified_strain_band_mass(jump_constants):
    # the smoothed jump is carried by a band whose strain integrates to the
    # jump density mass
    ur = mollify(jump_constants, 0.04)
    nodes, wts = gauss_segments(0.40, 0.50, 16, 4)
    vals = np.array([ur.strain_one(np.array([0.5, t]))[1] for t in nodes])
    assert wts @ vals == pytest.approx(0.5, abs=2e-4)
