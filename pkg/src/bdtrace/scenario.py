"""Scenario configs: TOML files describing a domain, a field, optional
interfaces, quadrature settings, and the checks to run."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .domains import sine_graph_domain, unit_square_domain
from .expressions import ExpressionError, compile_scalar, compile_vector
from .fields import AffineField, Interface, InterfacePiece, PiecewiseField, RigidField, SmoothField
from .geometry import Domain, GeometryError, LipschitzGraphChart
from .quadrature import GraphBand, QuadratureSpec
from .symtensor import SkewTensor

__all__ = ["ConfigError", "CheckSpec", "Scenario", "load_scenario"]

KNOWN_CHECKS = (
    "sym-inequality",
    "cone-geometry",
    "trace-restriction",
    "ibp",
    "directional-ibp",
    "collar",
    "trace-norm",
    "strict-convergence",
    "jump-reconstruction",
    "averaged-agreement",
)


class ConfigError(ValueError):
    """Malformed scenario configuration."""


@dataclass
class CheckSpec:
    kind: str
    tolerance: float
    params: dict = dc_field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    dim: int
    seed: int
    quadrature: QuadratureSpec
    domain: Domain
    field: object
    interfaces: dict
    checks: list[CheckSpec]
    path: str = ""


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{context}]")
    return table[key]


def _graph_vars(dim: int) -> tuple[str, ...]:
    return ("w1",) if dim == 2 else ("w1", "w2")


def _parse_chart(tab: dict, dim: int, idx: int) -> LipschitzGraphChart:
    ctx = f"domain.charts[{idx}]"
    frame = np.asarray(_require(tab, "frame", ctx), dtype=float)
    gvars = _graph_vars(dim)
    graph = compile_scalar(_require(tab, "graph", ctx), gvars)
    grad = None
    if "grad" in tab:
        grad = compile_vector(tab["grad"], gvars)
    try:
        return LipschitzGraphChart(
            frame=frame,
            graph=graph,
            grad=grad,
            lipschitz_constant=float(_require(tab, "lipschitz", ctx)),
            window=tuple(tuple(map(float, w)) for w in _require(tab, "window", ctx)),
            outer_window=tuple(tuple(map(float, w)) for w in _require(tab, "outer_window", ctx)),
            depth=float(tab.get("depth", 0.5)),
            kinks=tuple(tuple(map(float, k)) for k in tab.get("kinks", [])) or (),
            name=str(tab.get("name", f"chart-{idx}")),
        )
    except GeometryError as exc:
        raise ConfigError(f"invalid chart in [{ctx}]: {exc}") from None


def _parse_band(tab: dict, dim: int, idx: int) -> GraphBand:
    ctx = f"domain.bands[{idx}]"
    window = tuple(tuple(map(float, w)) for w in _require(tab, "window", ctx))
    gvars = _graph_vars(dim)

    def bound(value):
        if isinstance(value, (int, float)):
            return float(value)
        return compile_scalar(value, gvars)

    return GraphBand(window, bound(_require(tab, "lower", ctx)),
                     bound(_require(tab, "upper", ctx)))


def _parse_domain(tab: dict, dim: int) -> Domain:
    if "builtin" in tab:
        name = tab["builtin"]
        if name == "unit-square":
            return unit_square_domain()
        if name == "sine-graph":
            return sine_graph_domain()
        raise ConfigError(f"unknown builtin domain {name!r}")
    charts = [_parse_chart(t, dim, i) for i, t in enumerate(tab.get("charts", []))]
    bands = [_parse_band(t, dim, i) for i, t in enumerate(tab.get("bands", []))]
    if not charts or not bands:
        raise ConfigError("an explicit [domain] needs charts and bands (or use builtin)")
    return Domain(dim, tuple(bands), tuple(charts), name=str(tab.get("name", "custom")))


def _parse_interface(tab: dict, dim: int, idx: int) -> tuple[str, Interface]:
    ctx = f"interfaces[{idx}]"
    name = str(tab.get("name", f"interface-{idx}"))
    pieces = []
    raw_pieces = tab.get("pieces")
    if raw_pieces is None:
        raw_pieces = [tab]
    gvars = _graph_vars(dim)
    for j, pt in enumerate(raw_pieces):
        pieces.append(InterfacePiece(
            frame=np.asarray(pt.get("frame", np.eye(dim).tolist()), dtype=float),
            graph=compile_scalar(_require(pt, "graph", ctx), gvars),
            grad=compile_vector(_require(pt, "grad", ctx), gvars),
            window=tuple(tuple(map(float, w)) for w in _require(pt, "window", ctx)),
            orientation=int(pt.get("orientation", 1)),
            name=f"{name}-{j}",
        ))
    return name, Interface(tuple(pieces))


def _parse_field(tab: dict, dim: int, interfaces: dict):
    kind = _require(tab, "kind", "field")
    if kind == "rigid":
        return RigidField(b=np.asarray(_require(tab, "b", "field"), dtype=float),
                          spin=SkewTensor(dim, tuple(_require(tab, "spin", "field"))))
    if kind == "affine":
        return AffineField(b=np.asarray(_require(tab, "b", "field"), dtype=float),
                           matrix=np.asarray(_require(tab, "matrix", "field"), dtype=float))
    if kind == "smooth":
        func = compile_vector(_require(tab, "u", "field"))
        strain = compile_vector(tab["strain"]) if "strain" in tab else None
        return SmoothField(func=func, dim=dim, strain_func=strain,
                           name=str(tab.get("name", "smooth")))
    if kind == "piecewise":
        iface_name = _require(tab, "interface", "field")
        if iface_name not in interfaces:
            raise ConfigError(f"field references unknown interface {iface_name!r}")
        plus = _parse_field(_require(tab, "plus", "field"), dim, interfaces)
        minus = _parse_field(_require(tab, "minus", "field"), dim, interfaces)
        return PiecewiseField(plus, minus, interfaces[iface_name])
    raise ConfigError(f"unknown field kind {kind!r}")


def load_scenario(path) -> Scenario:
    """Parse one scenario file; raises ConfigError with location context."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from None
    try:
        return _build_scenario(data, str(path))
    except ExpressionError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _build_scenario(data: dict, path: str) -> Scenario:
    meta = data.get("scenario", {})
    name = str(meta.get("name", Path(path).stem))
    dim = int(meta.get("dimension", 2))
    if dim not in (2, 3):
        raise ConfigError(f"dimension must be 2 or 3, got {dim}")
    seed = int(meta.get("seed", 0))

    q = data.get("quadrature", {})
    try:
        quad = QuadratureSpec(order=int(q.get("order", 4)),
                              cells_per_axis=int(q.get("cells_per_axis", 32)),
                              refinement_levels=int(q.get("refinement_levels", 3)))
    except ValueError as exc:
        raise ConfigError(f"invalid [quadrature]: {exc}") from None

    if "domain" not in data:
        raise ConfigError("missing [domain] section")
    domain = _parse_domain(data["domain"], dim)
    if domain.dim != dim:
        raise ConfigError("domain dimension does not match the scenario dimension")

    interfaces = {}
    for i, tab in enumerate(data.get("interfaces", [])):
        iname, iface = _parse_interface(tab, dim, i)
        interfaces[iname] = iface

    if "field" not in data:
        raise ConfigError("missing [field] section")
    field = _parse_field(data["field"], dim, interfaces)
    if field.dim != dim:
        raise ConfigError("field dimension does not match the scenario dimension")

    checks = []
    for i, tab in enumerate(data.get("checks", [])):
        kind = _require(tab, "kind", f"checks[{i}]")
        if kind not in KNOWN_CHECKS:
            raise ConfigError(f"unknown check kind {kind!r} "
                              f"(known: {', '.join(KNOWN_CHECKS)})")
        tol = float(tab.get("tol", 1e-4))
        params = {k: v for k, v in tab.items() if k not in ("kind", "tol")}
        checks.append(CheckSpec(kind, tol, params))
    if not checks:
        raise ConfigError("scenario declares no checks")
    return Scenario(name, dim, seed, quad, domain, field, interfaces, checks, path)
