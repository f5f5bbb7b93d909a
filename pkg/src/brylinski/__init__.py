"""Brylinski beta function of a surface in R^3.

B_M(s) = integral over M x M of |v - u|^s, meromorphic in s with simple
poles at s = -2, -4, -6, ...; this package evaluates it by direct singular
quadrature where the defining integral converges and by spherical-mean
analytic continuation elsewhere, extracts the curvature residues, and
computes the renormalized Mobius energy at s = -4.
"""

from .errors import (
    BrylinskiError,
    ImmersionError,
    NumericalError,
    PoleGuardError,
    RichardsonError,
    SpecError,
    ToleranceError,
)
from .series import TruncatedSeries2, invert_map, series_add, series_compose2, series_mul
from .special import GammaPoleError, euler_beta, gamma, log_gamma
from .surface import (
    Chart,
    ChartQuadrature,
    FundamentalForms,
    Surface,
    area_element,
    chart_from_positions,
    ellipsoid,
    fundamental_forms,
    graph_patch,
    make_builtin,
    principal_curvatures,
    quadrature_nodes,
    rigid_transform,
    sphere,
    surface_area,
    torus,
)
from .jet import (
    CurvatureInvariants,
    JetCoefficients,
    LocalFrame,
    curvature_invariants,
    extract_jet,
    pointwise_residues_closed_form,
    residue_cross_check,
    sphere_jet,
)
from .beta import (
    CutoffSpec,
    MeromorphicResult,
    SphericalMean,
    beta_global_direct,
    beta_point_continued,
    beta_point_direct,
    finite_part_at_pole,
    global_residue,
    mobius_energy,
    radial_derivative_at_zero,
    residue_numeric,
    sphere_oracle,
)

__version__ = "0.1.0"
