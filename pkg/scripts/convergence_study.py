#!/usr/bin/env python3
"""Convergence study: how trace accuracy, the integration-by-parts residual,
and one-sided interface limits behave under quadrature refinement and
shrinking limit sequences. Prints plain tables suitable for plotting.
"""

import argparse
import time

import numpy as np

from bdtrace.domains import sine_graph_domain, unit_square_domain
from bdtrace.fields import SmoothField
from bdtrace.quadrature import QuadratureSpec
from bdtrace.symtensor import frobenius
from bdtrace.trace import trace_field
from bdtrace.verify import field_scale, ibp_residual
from bdtrace.cli import _default_phis


def trig_field():
    def u(p):
        return np.stack([np.sin(p[..., 0]) * np.cos(p[..., 1]),
                         np.cos(2 * p[..., 0]) + 0.5 * p[..., 1]], axis=-1)

    def strain(p):
        e11 = np.cos(p[..., 0]) * np.cos(p[..., 1])
        e12 = 0.5 * (-np.sin(p[..., 0]) * np.sin(p[..., 1]) - 2 * np.sin(2 * p[..., 0]))
        e22 = np.full(p[..., 0].shape, 0.5)
        return np.stack([e11, e12, e22], axis=-1)

    return SmoothField(func=u, dim=2, strain_func=strain, name="trig")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--domain", choices=["unit-square", "sine-graph"],
                        default="sine-graph")
    parser.add_argument("--cells", type=int, nargs="+", default=[8, 16, 32, 64])
    args = parser.parse_args()

    dom = unit_square_domain() if args.domain == "unit-square" else sine_graph_domain()
    f = trig_field()
    phi = _default_phis(2)[1]
    scale = field_scale(f, dom)

    print(f"# domain={dom.name} field=trig")
    print(f"{'cells':>6} {'h':>10} {'trace_err':>12} {'ibp_resid':>12} {'secs':>7}")
    for cells in args.cells:
        spec = QuadratureSpec(order=4, cells_per_axis=cells, refinement_levels=1)
        t0 = time.perf_counter()
        traces = trace_field(f, dom, spec)
        terr = max(float(np.max(np.linalg.norm(tf.gamma_world - f(tf.points), axis=1)))
                   for tf in traces)
        resid = frobenius(ibp_residual(f, dom, phi, spec, traces)) / scale
        dt = time.perf_counter() - t0
        print(f"{cells:6d} {1.0 / cells:10.3e} {terr:12.3e} {resid:12.3e} {dt:7.2f}")


if __name__ == "__main__":
    main()
