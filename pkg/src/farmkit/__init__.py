"""Robust high-dimensional factor analysis toolkit.

Estimator classes follow the scikit-learn fit/transform/predict protocol;
underneath them sits a functional layer of numerical operations that can be
used directly.
"""

__version__ = "0.1.0"

from .exceptions import (
    ConvergenceError,
    DegenerateGapError,
    DimensionError,
    FarmkitError,
    PreconditionError,
    RankDeficiencyError,
)
from .linalg import EigenSystem, SvdSystem, dilate, eig_sym, eig_top_k, svd
from .perturbation import (
    best_rotation,
    davis_kahan_bound,
    entrywise_pert_bound,
    entrywise_pert_profile,
    signal_eigen_gap,
    sin_theta,
    weyl_check,
)
from .robust import (
    CovEstimate,
    HuberConfig,
    default_shrinkage_tau,
    default_tau,
    elementwise_robust_cov,
    huber_mean,
    sample_cov,
    sample_mean,
    shrinkage_cov,
    truncated_mean,
    ustat_cov,
)
from .factors import (
    FactorFit,
    FactorModel,
    KSelection,
    build_covariance,
    fit_pca_factors,
    k_diff,
    k_info,
    k_ratio,
    pervasiveness_diag,
)
from .covariance import (
    ObservedFactorCovariance,
    PoetCovariance,
    StructuredCov,
    ThresholdRule,
    default_omega_observed,
    default_omega_poet,
    entropy_loss_norm,
    observed_factor_cov,
    poet,
    threshold_cov,
)
from .pcr import (
    PcrFit,
    PrincipalComponentRegressor,
    excess_risk_exact,
    excess_risk_formula,
    gaussian_sketch,
    pcr_fit,
    sketch_alignment,
    sketched_pcr_fit,
    stable_rank,
)

__all__ = [name for name in dir() if not name.startswith("_")]
