"""anosovlab: a numerical laboratory for Anosov endomorphisms of the torus.

Build conservative perturbations of hyperbolic integer matrices acting
on T^n, realize backward orbits branch by branch, estimate the unstable
directions and Lyapunov exponents they select, trace unstable leaves on
the universal cover, and test equidistribution of forward orbits.
"""

__version__ = "0.1.0"

from .torus import (
    DepthMismatchError,
    lift_near,
    prehistory_metric,
    project,
    torus_distance,
)
from .linear import (
    LinearEndo,
    NonHyperbolicError,
    SplittingPolicyError,
    analyze,
    coset_representatives,
    preimages_linear,
)
from .smooth import (
    REFERENCE_MATRIX,
    SHIPPED_COMPOSITIONS,
    HyperbolicityCertificate,
    NewtonDivergenceError,
    ShearMap,
    SmoothEndo,
    build_endo,
    c1_distance_to_linear,
    shipped_endo,
    verify_cones,
)
from .prehistory import (
    EnumerationCapError,
    Prehistory,
    all_prehistories,
    extend,
    prehistory_from_word,
    random_prehistories,
    random_prehistory,
    shift_forward,
    truncate,
)
from .directions import (
    DirectionCensus,
    MonotonicityReport,
    angle_decay,
    canonical_direction,
    census,
    monotonicity_check,
    projective_angle,
    stable_direction,
    unstable_direction,
)
from .lyapunov import (
    ExponentCensus,
    LyapunovEstimate,
    budget_check,
    exponent_census,
    stable_lyapunov,
    unstable_lyapunov,
)
from .foliation import (
    LeafSegment,
    LeafTraceError,
    asymptotic_direction_check,
    cover_unstable_direction,
    growth_ratio_check,
    linear_sandwich_check,
    quasi_isometry_fit,
    trace_leaf,
)
from .ergodic import (
    ConservativityError,
    ErgodicityReport,
    Observable,
    birkhoff_average,
    birkhoff_averages,
    ergodicity_test,
    spread_scaling,
)

__all__ = [
    "__version__",
    # torus
    "project", "lift_near", "torus_distance", "prehistory_metric",
    "DepthMismatchError",
    # linear
    "analyze", "coset_representatives", "preimages_linear",
    "LinearEndo", "NonHyperbolicError", "SplittingPolicyError",
    # smooth
    "ShearMap", "SmoothEndo", "build_endo", "shipped_endo",
    "SHIPPED_COMPOSITIONS", "REFERENCE_MATRIX", "verify_cones",
    "c1_distance_to_linear", "HyperbolicityCertificate",
    "NewtonDivergenceError",
    # prehistory
    "Prehistory", "prehistory_from_word", "random_prehistory",
    "random_prehistories", "all_prehistories", "extend", "shift_forward",
    "truncate", "EnumerationCapError",
    # directions
    "canonical_direction", "projective_angle", "unstable_direction",
    "stable_direction", "census", "DirectionCensus", "monotonicity_check",
    "MonotonicityReport", "angle_decay",
    # lyapunov
    "unstable_lyapunov", "stable_lyapunov", "budget_check",
    "exponent_census", "LyapunovEstimate", "ExponentCensus",
    # foliation
    "cover_unstable_direction", "trace_leaf", "LeafSegment",
    "LeafTraceError", "quasi_isometry_fit", "growth_ratio_check",
    "asymptotic_direction_check", "linear_sandwich_check",
    # ergodic
    "Observable", "birkhoff_average", "birkhoff_averages",
    "ergodicity_test", "spread_scaling", "ErgodicityReport",
    "ConservativityError",
]
