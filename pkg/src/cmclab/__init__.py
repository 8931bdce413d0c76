"""Numerical laboratory for CMC foliations near infinity.

Builds the constant-mean-curvature foliation of asymptotically
Schwarzschildean Riemannian 3-manifolds, computes coordinate CMC and ADM
centers of mass and quasi-local linear momenta, and verifies the evolution
law dz/dt = P/m together with the CMC = ADM center equivalence on analytic
metric families.
"""

import os as _os

# honor the thread-count variable before numpy chooses its pools; only
# effective when this package is imported before numpy (the CLI path)
_threads = _os.environ.get("CMCLAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"

from .sphere import (
    SphericalGrid,
    ScalarField,
    SpectralCoeffs,
    build_grid,
    analyze,
    synthesize,
    integrate,
    sphere_laplacian,
    tangential_gradient,
    project_low_modes,
)
from .models import (
    DecayClass,
    MetricModel,
    InitialDataModel,
    euclidean,
    schwarzschild,
    translated,
    interpolated,
    perturbed_schwarzschild,
    synthetic_data,
    time_symmetric_data,
    artificial_data,
    christoffel,
    ricci,
    scalar_curvature,
    momentum_density,
    energy_density,
    verify_decay,
)
from .surfaces import (
    SurfaceEmbedding,
    SurfaceGeometry,
    compute_geometry,
    euclidean_center,
    stability_operator_apply,
    low_eigenpairs,
    sobolev_norm,
    resample,
    surface_divergence,
)
from .cmc import (
    SolverConfig,
    CmcLeaf,
    FoliationResult,
    RadialLapse,
    target_mean_curvature,
    newton_step,
    solve_cmc,
    solve_foliation,
    solve_radial_lapse,
)
from .physics import (
    MomentumReport,
    EvolutionReport,
    CenterReport,
    ArtificialFlowResult,
    quasi_local_momentum,
    adm_center_integral,
    adm_center_from_leaf_formula,
    lapse_rhs,
    solve_lapse,
    center_velocity_from_lapse,
    evolution_residual,
    artificial_flow_integrate,
    cmc_adm_center_report,
)
from .fits import DecayFit, RichardsonResult, fit_decay_exponent, richardson_extrapolate
from .config import ExperimentConfig, parse_config
from .acceptance import run_acceptance

__all__ = [
    "__version__",
    # sphere calculus
    "SphericalGrid",
    "ScalarField",
    "SpectralCoeffs",
    "build_grid",
    "analyze",
    "synthesize",
    "integrate",
    "sphere_laplacian",
    "tangential_gradient",
    "project_low_modes",
    # metric models
    "DecayClass",
    "MetricModel",
    "InitialDataModel",
    "euclidean",
    "schwarzschild",
    "translated",
    "interpolated",
    "perturbed_schwarzschild",
    "synthetic_data",
    "time_symmetric_data",
    "artificial_data",
    "christoffel",
    "ricci",
    "scalar_curvature",
    "momentum_density",
    "energy_density",
    "verify_decay",
    # surface geometry
    "SurfaceEmbedding",
    "SurfaceGeometry",
    "compute_geometry",
    "euclidean_center",
    "stability_operator_apply",
    "low_eigenpairs",
    "sobolev_norm",
    "resample",
    "surface_divergence",
    # CMC solver
    "SolverConfig",
    "CmcLeaf",
    "FoliationResult",
    "RadialLapse",
    "target_mean_curvature",
    "newton_step",
    "solve_cmc",
    "solve_foliation",
    "solve_radial_lapse",
    # physics
    "MomentumReport",
    "EvolutionReport",
    "CenterReport",
    "ArtificialFlowResult",
    "quasi_local_momentum",
    "adm_center_integral",
    "adm_center_from_leaf_formula",
    "lapse_rhs",
    "solve_lapse",
    "center_velocity_from_lapse",
    "evolution_residual",
    "artificial_flow_integrate",
    "cmc_adm_center_report",
    # fits, config, acceptance
    "DecayFit",
    "RichardsonResult",
    "fit_decay_exponent",
    "richardson_extrapolate",
    "ExperimentConfig",
    "parse_config",
    "run_acceptance",
]
