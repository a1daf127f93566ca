"""Symplectic and curvature invariants of immersed submanifolds of S^{2n-1} and their cones.

Exact derivative jets of parametrized links feed pointwise operators
(isotropy, the deviation f, mean curvature, div(JH)), grid scans for
Legendrian points with winding-number indices, the Lagrangian angle and the
periods of <JH, .>, and a closed-form classification and search over
homogeneous tori in S^5.
"""

from .catalog import (
    CATALOG,
    CLIFFORD,
    IRIYEH,
    S3_TORUS,
    HomogeneousTorusParams,
    homogeneous_torus,
    make_catalog_immersion,
    make_immersion,
)
from .config import Config, ConfigError
from .geometry import Jet, induced_metric, mean_curvature, sphere_mean_curvature
from .hodge import beta_periods, delta_alpha, d_alpha_residual, lagrangian_angle, theta_harmonicity
from .hopf import (
    EVERYWHERE_LEGENDRIAN,
    cauchy_riemann_residual,
    find_legendrian_points,
    hopf_analysis,
    poincare_hopf_audit,
    winding_number,
)
from .immersions import Immersion
from .report import Report, run_analysis
from .search import classify_family_member, search_legendrian_hs, snap_weights
from .stationarity import (
    hs_cone_classify,
    isotropy_residual,
    legendrian_residual,
    stationarity_residual,
)

__version__ = "0.1.0"

__all__ = [
    "CATALOG",
    "CLIFFORD",
    "IRIYEH",
    "S3_TORUS",
    "HomogeneousTorusParams",
    "homogeneous_torus",
    "make_catalog_immersion",
    "make_immersion",
    "Config",
    "ConfigError",
    "Jet",
    "induced_metric",
    "mean_curvature",
    "sphere_mean_curvature",
    "beta_periods",
    "delta_alpha",
    "d_alpha_residual",
    "lagrangian_angle",
    "theta_harmonicity",
    "EVERYWHERE_LEGENDRIAN",
    "cauchy_riemann_residual",
    "find_legendrian_points",
    "hopf_analysis",
    "poincare_hopf_audit",
    "winding_number",
    "Immersion",
    "Report",
    "run_analysis",
    "classify_family_member",
    "search_legendrian_hs",
    "snap_weights",
    "hs_cone_classify",
    "isotropy_residual",
    "legendrian_residual",
    "stationarity_residual",
]
