"""Whitney coverings, chains, polynomial extension and difference-seminorm estimators."""

from .chains import (
    Chain,
    ChainBuilder,
    ChainError,
    UniformityReport,
    admissibility,
    best_epsilon,
    build_chain,
    estimate_uniformity,
    rho_epsilon,
    shadow,
    shadow_sum_diagnostics,
)
from .config import ConfigError, ExperimentConfig, load_config
from .covering import (
    CoveringFamily,
    WhitneyParams,
    build_families,
    check_symmetrization,
    whitney_cover,
)
from .domains import make_domain
from .extension import BoundaryEvalError, ExtensionField, PartitionOfUnity, build_pou, extend
from .fields import FieldFunction, make_field
from .geometry import DyadicCube, cube_box, long_distance, long_distance_centers, neighbors
from .norms import (
    NormParams,
    NormReport,
    QuadratureSpec,
    Region,
    SeminormEstimator,
    inequality_diagnostics,
    norm_A_spq,
    norm_extension_global,
    norm_Wkp,
    seminorm_A,
)
from .polynomials import PolyCoeffs, multi_indices, poly_eval, project, ring_diff, verify_poly_lemma
from .render import render_svg

__all__ = [
    "BoundaryEvalError",
    "Chain",
    "ChainBuilder",
    "ChainError",
    "ConfigError",
    "CoveringFamily",
    "DyadicCube",
    "ExperimentConfig",
    "ExtensionField",
    "FieldFunction",
    "NormParams",
    "NormReport",
    "PartitionOfUnity",
    "PolyCoeffs",
    "QuadratureSpec",
    "Region",
    "SeminormEstimator",
    "UniformityReport",
    "WhitneyParams",
    "admissibility",
    "best_epsilon",
    "build_chain",
    "build_families",
    "build_pou",
    "check_symmetrization",
    "cube_box",
    "estimate_uniformity",
    "extend",
    "inequality_diagnostics",
    "load_config",
    "long_distance",
    "long_distance_centers",
    "make_domain",
    "make_field",
    "multi_indices",
    "neighbors",
    "norm_A_spq",
    "norm_Wkp",
    "norm_extension_global",
    "poly_eval",
    "project",
    "render_svg",
    "rho_epsilon",
    "seminorm_A",
    "shadow",
    "shadow_sum_diagnostics",
    "verify_poly_lemma",
    "whitney_cover",
]
