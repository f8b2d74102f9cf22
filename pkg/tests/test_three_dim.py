"""Dimension-generic layers exercised in 3d: algebra, quadrature over bands,
cone sweeps, flat-interface one-sided limits, and mollification."""

import math

import numpy as np
import pytest

from bdtrace.fields import AffineField, Interface, InterfacePiece, PiecewiseField, mollify, strain_ac
from bdtrace.quadrature import Box, GraphBand, QuadratureSpec, integrate_volume
from bdtrace.sweeps import beta_inclusion_sweep, cone_separation_sweep, reparametrized_lipschitz_sweep
from bdtrace.symtensor import frobenius, sym_outer, sym_part
from bdtrace.trace import one_sided_limits

SPEC = QuadratureSpec(order=4, cells_per_axis=6, refinement_levels=1)


def test_unit_cube_volume():
    box = Box(((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)))
    val = integrate_volume(lambda p: np.ones(p.shape[0]), box, SPEC).value
    assert val == pytest.approx(1.0, abs=1e-12)


def test_band_below_plane():
    # {x3 < (x1 + x2)/2} over the unit square footprint: volume 1/2
    band = GraphBand(((0.0, 1.0), (0.0, 1.0)), 0.0, lambda p: 0.5 * (p[:, 0] + p[:, 1]))
    val = integrate_volume(lambda p: np.ones(p.shape[0]), band, SPEC).value
    assert val == pytest.approx(0.5, abs=1e-12)


def test_affine_strain_3d():
    m = np.array([[0.1, 0.4, 0.0], [0.0, -0.2, 0.5], [0.3, 0.0, 0.2]])
    u = AffineField(b=np.zeros(3), matrix=m)
    assert np.allclose(strain_ac(u, [0.2, 0.3, 0.4]).to_matrix(), sym_part(m).to_matrix())


def test_sym_outer_3d_lower_bound():
    rng = np.random.default_rng(5)
    for _ in range(200):
        a, b = rng.uniform(-1, 1, size=(2, 3))
        assert frobenius(sym_outer(a, b)) >= np.linalg.norm(a) * np.linalg.norm(b) / math.sqrt(2) - 1e-12


def test_cone_sweeps_3d():
    rng = np.random.default_rng(6)
    assert cone_separation_sweep(rng, 1.0, graphs=3, samples=60, dim=3) > 1e-12
    assert beta_inclusion_sweep(rng, 0.5, samples=200, dim=3) == 0.0
    assert reparametrized_lipschitz_sweep(rng, 0.5, graphs=2, directions=3,
                                          pairs=20, dim=3) == 0.0


def _flat_interface_3d():
    return Interface((InterfacePiece(
        frame=np.eye(3),
        graph=lambda p: np.full(p.shape[0], 0.5),
        grad=lambda p: np.zeros_like(p),
        window=((-1.0, 2.0), (-1.0, 2.0)),
        orientation=1,
        name="flat3"),))


def test_one_sided_limits_flat_3d():
    iface = _flat_interface_3d()
    uj = PiecewiseField(AffineField(b=np.array([1.0, 0.0, 2.0]), matrix=np.zeros((3, 3))),
                        AffineField(b=np.array([0.0, 0.5, 0.0]), matrix=np.zeros((3, 3))),
                        iface)
    x = np.array([0.4, 0.6, 0.5])
    up, um = one_sided_limits(uj, iface, x, rho0=0.05, levels=8, cells=8)
    assert np.allclose(up, [1.0, 0.0, 2.0], atol=1e-12)
    assert np.allclose(um, [0.0, 0.5, 0.0], atol=1e-12)


def test_mollify_3d_constant_and_affine():
    const = AffineField(b=np.array([1.0, -2.0, 0.5]), matrix=np.zeros((3, 3)))
    ur = mollify(const, 0.1, cells=6)
    assert np.allclose(ur([0.3, 0.3, 0.3]), [1.0, -2.0, 0.5], atol=1e-12)
    m = np.array([[0.1, 0.2, 0.0], [0.0, 0.1, 0.3], [0.2, 0.0, -0.1]])
    aff = AffineField(b=np.zeros(3), matrix=m)
    x = np.array([0.2, 0.1, 0.4])
    assert np.allclose(mollify(aff, 0.08, cells=6)(x), aff(x), atol=1e-12)
