import numpy as np
import pytest

from bdtrace.domains import sine_graph_domain, unit_square_domain
from bdtrace.fields import AffineField, Interface, InterfacePiece, PiecewiseField, RigidField, SmoothField
from bdtrace.quadrature import QuadratureSpec
from bdtrace.symtensor import SkewTensor


@pytest.fixture(scope="session")
def square():
    return unit_square_domain()


@pytest.fixture(scope="session")
def sine_domain():
    return sine_graph_domain()


@pytest.fixture(scope="session")
def fast_spec():
    return QuadratureSpec(order=4, cells_per_axis=8, refinement_levels=1)


@pytest.fixture(scope="session")
def mid_spec():
    return QuadratureSpec(order=4, cells_per_axis=16, refinement_levels=2)


@pytest.fixture(scope="session")
def affine_field():
    return AffineField(b=np.array([0.1, -0.2]), matrix=np.array([[0.3, -0.7], [0.2, 0.5]]))


@pytest.fixture(scope="session")
def rigid_field():
    return RigidField(b=np.array([0.5, -1.0]), spin=SkewTensor(2, (0.7,)))


def _trig(p):
    return np.stack([np.sin(p[..., 0]) * np.cos(p[..., 1]),
                     np.cos(2 * p[..., 0]) + 0.5 * p[..., 1]], axis=-1)


def _trig_strain(p):
    e11 = np.cos(p[..., 0]) * np.cos(p[..., 1])
    e12 = 0.5 * (-np.sin(p[..., 0]) * np.sin(p[..., 1]) - 2 * np.sin(2 * p[..., 0]))
    e22 = np.full(p[..., 0].shape, 0.5)
    return np.stack([e11, e12, e22], axis=-1)


@pytest.fixture(scope="session")
def trig_field():
    return SmoothField(func=_trig, dim=2, strain_func=_trig_strain, name="trig")


def flat_interface(height=0.45, orientation=1):
    return Interface((InterfacePiece(
        frame=np.eye(2),
        graph=lambda p, h=height: np.full(p.shape[0] if p.ndim > 1 else p.shape[0], float(h)),
        grad=lambda p: np.zeros_like(p),
        window=((-0.5, 1.5),),
        orientation=orientation,
        name="flat"),))


def curved_interface(orientation=1):
    return Interface((InterfacePiece(
        frame=np.eye(2),
        graph=lambda p: 0.45 + 0.2 * np.sin(p[..., 0]),
        grad=lambda p: 0.2 * np.cos(p[..., 0])[..., None],
        window=((-0.5, 1.5),),
        orientation=orientation,
        name="curved"),))


@pytest.fixture(scope="session")
def jump_constants():
    iface = flat_interface()
    plus = AffineField(b=np.array([1.0, 0.0]), matrix=np.zeros((2, 2)))
    minus = AffineField(b=np.array([0.0, 0.0]), matrix=np.zeros((2, 2)))
    return PiecewiseField(plus, minus, iface)


@pytest.fixture(scope="session")
def jump_affine():
    iface = flat_interface()
    plus = AffineField(b=np.array([1.0, 0.2]), matrix=np.array([[0.1, 0.0], [0.3, -0.2]]))
    minus = AffineField(b=np.array([0.0, 0.0]), matrix=np.array([[-0.2, 0.4], [0.0, 0.1]]))
    return PiecewiseField(plus, minus, iface)


@pytest.fixture(scope="session")
def jump_mild():
    iface = flat_interface()
    plus = AffineField(b=np.array([0.595, 0.5375]), matrix=np.array([[0.11, 0.04], [0.06, -0.01]]))
    minus = AffineField(b=np.array([0.52, 0.50]), matrix=np.array([[0.11, 0.10], [0.06, 0.04]]))
    return PiecewiseField(plus, minus, iface)


@pytest.fixture(scope="session")
def jump_curved():
    iface = curved_interface()
    plus = AffineField(b=np.array([0.7, 0.3]), matrix=np.array([[0.1, 0.0], [0.2, -0.1]]))
    minus = AffineField(b=np.array([0.5, 0.25]), matrix=np.array([[0.1, 0.15], [0.2, 0.05]]))
    return PiecewiseField(plus, minus, iface)
