"""
Extrema - Emulador de krigagem, perfis sup/inf e limites sob incerteza
"""
from .sampling import make_generator, latin_hypercube, maximin_lhs, sobol_points
from .kernels_gp import (
    KernelSpec,
    TrendBasis,
    GpModel,
    kernel_eval,
    kernel_grad_x,
    build_model,
    fit,
    concentrated_loglik,
    posterior_mean,
    posterior_mean_grad,
    posterior_cov,
    posterior_variance,
    q2_score,
    loo_q2,
    q2,
    compare_models,
    save_model,
    load_model,
)
from .optimize import (
    BoxDomain,
    Projection,
    EqualityFiber,
    null_space,
    lp_feasible_point,
    make_fiber,
    lbfgsb_maximize,
    constrained_maximize,
    constrained_minimize,
)
from .profiles import (
    Provenance,
    ProfileGrid,
    ProfileCurve,
    ProfileMap,
    grid_1d,
    lattice_2d,
    coordinate_profiles,
    oblique_profiles,
    bivariate_profiles,
    profile_point,
    approximate_profile_1d,
    approximate_curve,
    approximate_profile_2d,
    excursion_intervals,
    excluded_volume,
    excluded_area,
)
from .uq import (
    ApproxProcess,
    RealizationSet,
    BoundEnvelope,
    select_pilot_points,
    build_approx_process,
    realization_eval,
    realization_grad,
    simulate_realizations,
    profile_envelope,
    sigma_delta,
    sigma_delta_sq,
    bound_envelope,
    borell_tis_tail,
    integrated_delta_variance,
    endpoint_intervals,
)
from .testfns import AnalyticFn2d, AnalyticFn3d, Synthetic5d, get_test_function

__all__ = [
    # Amostragem
    "make_generator",
    "latin_hypercube",
    "maximin_lhs",
    "sobol_points",
    # Kernels e GP
    "KernelSpec",
    "TrendBasis",
    "GpModel",
    "kernel_eval",
    "kernel_grad_x",
    "build_model",
    "fit",
    "concentrated_loglik",
    "posterior_mean",
    "posterior_mean_grad",
    "posterior_cov",
    "posterior_variance",
    "q2_score",
    "loo_q2",
    "q2",
    "compare_models",
    "save_model",
    "load_model",
    # Otimização
    "BoxDomain",
    "Projection",
    "EqualityFiber",
    "null_space",
    "lp_feasible_point",
    "make_fiber",
    "lbfgsb_maximize",
    "constrained_maximize",
    "constrained_minimize",
    # Perfis
    "Provenance",
    "ProfileGrid",
    "ProfileCurve",
    "ProfileMap",
    "grid_1d",
    "lattice_2d",
    "coordinate_profiles",
    "oblique_profiles",
    "bivariate_profiles",
    "profile_point",
    "approximate_profile_1d",
    "approximate_curve",
    "approximate_profile_2d",
    "excursion_intervals",
    "excluded_volume",
    "excluded_area",
    # Incerteza
    "ApproxProcess",
    "RealizationSet",
    "BoundEnvelope",
    "select_pilot_points",
    "build_approx_process",
    "realization_eval",
    "realization_grad",
    "simulate_realizations",
    "profile_envelope",
    "sigma_delta",
    "sigma_delta_sq",
    "bound_envelope",
    "borell_tis_tail",
    "integrated_delta_variance",
    "endpoint_intervals",
    # Funções de teste
    "AnalyticFn2d",
    "AnalyticFn3d",
    "Synthetic5d",
    "get_test_function",
]
