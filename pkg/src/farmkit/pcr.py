"""Principal component regression, with an optional Gaussian random sketch.

The design matrix follows the package convention: shape (n_samples,
n_features), and the model is ``y = X beta + noise`` without an intercept.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ._validation import as_matrix, as_vector
from .exceptions import DimensionError, RankDeficiencyError
from .perturbation import sin_theta

__all__ = [
    "PcrFit",
    "pcr_fit",
    "sketched_pcr_fit",
    "excess_risk_formula",
    "excess_risk_exact",
    "gaussian_sketch",
    "stable_rank",
    "PrincipalComponentRegressor",
]

_RANK_TOL = 1e-10


@dataclass
class PcrFit:
    """Fitted PCR coefficients plus the spectral context they came from."""

    beta_hat: np.ndarray
    n_components: int
    singulars: np.ndarray
    sketched: bool = False
    sketch_size: int = 0


def _svd_design(x):
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    return u, s, vt.T


def pcr_fit(x, y, k: int) -> PcrFit:
    """Least squares restricted to the span of the top-k right singular vectors.

    Closed form ``beta = V_k S_k^-1 U_k^T y`` from the thin SVD of the
    design. Requires ``k <= rank(X)``; the k-th singular value must be
    positive.
    """
    xm = as_matrix(x, "x")
    yv = as_vector(y, "y")
    n, p = xm.shape
    if yv.shape[0] != n:
        raise DimensionError(f"y has {yv.shape[0]} entries, expected {n}")
    if not 1 <= k <= min(n, p):
        raise DimensionError(f"k must be in [1, {min(n, p)}], got {k}")
    u, s, v = _svd_design(xm)
    if s[k - 1] <= _RANK_TOL * max(1.0, s[0]):
        raise RankDeficiencyError(
            f"sigma_{k} = {s[k - 1]:.3e} is numerically zero; k exceeds rank"
        )
    beta = v[:, :k] @ ((u[:, :k].T @ yv) / s[:k])
    return PcrFit(beta, k, s.copy())


def gaussian_sketch(p: int, m: int, seed: int = 0) -> np.ndarray:
    """p-by-m sketching matrix with i.i.d. N(0, 1/m) entries."""
    if m < 1 or p < 1:
        raise ValueError("p and m must be at least 1")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0 / np.sqrt(m), size=(p, m))


def sketched_pcr_fit(x, y, k: int, sketch: np.ndarray) -> PcrFit:
    """PCR on the sketched design ``X R``, mapped back to the original space.

    Fits PCR to ``(X R, y)`` and returns ``R beta0`` so the fitted values
    ``X (R beta0)`` equal the sketched-PCR projection of ``y``. Requires
    ``m >= k`` and ``rank(X R) >= k``.
    """
    xm = as_matrix(x, "x")
    r = as_matrix(sketch, "sketch")
    if r.shape[0] != xm.shape[1]:
        raise DimensionError(
            f"sketch has {r.shape[0]} rows, expected {xm.shape[1]}"
        )
    if r.shape[1] < k:
        raise DimensionError(f"sketch size m={r.shape[1]} must be at least k={k}")
    inner = pcr_fit(xm @ r, y, k)
    return PcrFit(r @ inner.beta_hat, k, inner.singulars, True, r.shape[1])


def excess_risk_formula(x, beta_star, sigma: float, k: int) -> float:
    """Exact excess prediction risk of rank-k PCR under Gaussian noise.

    ``K sigma^2 / n`` (variance of the k fitted directions) plus the squared
    bias ``alpha_{k+}^T S_{k+}^2 alpha_{k+} / n`` from the discarded
    singular directions, with ``alpha = V^T beta_star``.
    """
    xm = as_matrix(x, "x")
    bs = as_vector(beta_star, "beta_star")
    n, p = xm.shape
    if bs.shape[0] != p:
        raise DimensionError(f"beta_star has {bs.shape[0]} entries, expected {p}")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    _, s, v = _svd_design(xm)
    if not 1 <= k <= s.shape[0] or s[k - 1] <= _RANK_TOL * max(1.0, s[0]):
        raise RankDeficiencyError(f"k={k} exceeds the numerical rank of x")
    alpha_tail = v[:, k:].T @ bs
    bias = float(np.sum((s[k:] * alpha_tail) ** 2)) / n
    return k * sigma**2 / n + bias


def excess_risk_exact(x, beta_star, sigma: float, beta_hat_map) -> float:
    """Excess risk of any projection-type fit with fitted values ``Q_k Q_k^T y``.

    ``beta_hat_map`` must be the n-by-n orthogonal projector onto the fitted
    subspace. Used to evaluate the sketched estimator without sampling.
    """
    xm = as_matrix(x, "x")
    bs = as_vector(beta_star, "beta_star")
    proj = as_matrix(beta_hat_map, "projector")
    n = xm.shape[0]
    target = xm @ bs
    bias = float(np.sum((target - proj @ target) ** 2)) / n
    k_eff = float(np.trace(proj))
    return k_eff * sigma**2 / n + bias


def sketch_alignment(x, sketch, k: int) -> float:
    """Spectral sin-theta between the top-k fitted subspaces of X and X R.

    Both subspaces live in sample space (left singular subspaces of the two
    designs); this is the alignment quantity entering the sketched-PCR risk
    inequality.
    """
    xm = as_matrix(x, "x")
    u, s, _ = _svd_design(xm)
    ut, st, _ = _svd_design(xm @ as_matrix(sketch, "sketch"))
    if s[k - 1] <= _RANK_TOL * max(1.0, s[0]) or st[k - 1] <= _RANK_TOL * max(1.0, st[0]):
        raise RankDeficiencyError("k exceeds the rank of X or X R")
    return sin_theta(u[:, :k], ut[:, :k], "spectral")


def stable_rank(x) -> float:
    """``||X||_F^2 / ||X||_2^2``, a soft rank in [1, rank(X)]."""
    xm = as_matrix(x, "x")
    s = np.linalg.svd(xm, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("stable rank of the zero matrix is undefined")
    return float(np.sum(s**2) / s[0] ** 2)


class PrincipalComponentRegressor(BaseEstimator, RegressorMixin):
    """Rank-constrained least squares, optionally on a random sketch.

    Parameters
    ----------
    n_components : int
        Number of leading singular directions retained.
    sketch_size : int or None
        If given, regression runs on ``X R`` with a Gaussian sketch of this
        width and the coefficients are mapped back.
    random_state : int
        Seed for the sketch.
    """

    def __init__(self, n_components=1, sketch_size=None, random_state=0):
        self.n_components = n_components
        self.sketch_size = sketch_size
        self.random_state = random_state

    def fit(self, X, y):
        x = as_matrix(X, "X")
        if self.sketch_size is not None:
            self.sketch_ = gaussian_sketch(
                x.shape[1], self.sketch_size, self.random_state
            )
            fit = sketched_pcr_fit(x, y, self.n_components, self.sketch_)
        else:
            self.sketch_ = None
            fit = pcr_fit(x, y, self.n_components)
        self.coef_ = fit.beta_hat
        self.singular_values_ = fit.singulars
        return self

    def predict(self, X):
        return as_matrix(X, "X") @ self.coef_
