"""Numerical verification of boundary traces, one-sided interface limits, and
integration-by-parts identities for vector fields with measure-valued strain
on Lipschitz graph domains."""

from .symtensor import (
    SkewTensor,
    SymTensor,
    as_direction,
    as_vector,
    contract,
    frobenius,
    sym_outer,
    sym_part,
)
from .quadrature import (
    Box,
    GraphBand,
    LimitEstimate,
    QuadratureResult,
    QuadratureSpec,
    integrate_surface,
    integrate_volume,
    limit_extrapolate,
)
from .geometry import (
    Collar,
    Domain,
    GeometryError,
    LipschitzGraphChart,
    admissible_radius,
    collar_volume_sample,
    cone_aperture,
    cone_beta,
    in_cone,
    make_collar,
    reparametrize,
)
from .fields import (
    AffineField,
    Interface,
    InterfacePiece,
    MeasureValue,
    MollifiedField,
    OnInterfaceError,
    PiecewiseField,
    RigidField,
    ScalarTestFunction,
    SmoothField,
    bump,
    distributional_strain,
    eval_field,
    mollify,
    strain_ac,
    strain_measure,
)
from .trace import (
    ChartTraceField,
    NonConvergedError,
    assemble_trace,
    averaged_trace,
    directional_trace,
    one_sided_limits,
    strain_density,
    trace_field,
)
from .verify import (
    CheckReport,
    collar_estimate_check,
    directional_ibp_residual,
    ibp_residual,
    jump_reconstruction_check,
    strict_convergence_experiment,
    total_strain_variation,
    trace_norm_bound,
)
from .domains import sine_graph_domain, unit_square_domain

__version__ = "0.1.0"
