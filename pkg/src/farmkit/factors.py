"""PCA-based factor extraction and number-of-factors estimation."""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_matrix, as_vector
from .exceptions import DimensionError, RankDeficiencyError
from .linalg import eig_sym
from .robust import CovEstimate, elementwise_robust_cov, sample_cov, shrinkage_cov, ustat_cov

__all__ = [
    "FactorFit",
    "KSelection",
    "fit_pca_factors",
    "k_ratio",
    "k_diff",
    "k_info",
    "pervasiveness_diag",
    "FactorModel",
]


@dataclass
class FactorFit:
    """Estimated factor model pieces.

    ``X = 1 mu^T + F B^T + U`` holds exactly by construction, with
    ``mu_hat`` (p,), ``loadings`` (p, k), ``factors`` (n, k) and
    ``residuals`` (n, p). ``eigvals`` are the top-k eigenvalues of the
    covariance input.
    """

    mu_hat: np.ndarray
    loadings: np.ndarray
    factors: np.ndarray
    residuals: np.ndarray
    eigvals: np.ndarray

    @property
    def n_factors(self) -> int:
        return self.loadings.shape[1]


@dataclass
class KSelection:
    """Chosen number of factors plus the evidence it was chosen from."""

    k_hat: int
    method: str
    diagnostics: dict = field(default_factory=dict)


def _cov_matrix(sigma_hat):
    if isinstance(sigma_hat, CovEstimate):
        return sigma_hat.matrix
    return as_matrix(sigma_hat, "sigma_hat")


def fit_pca_factors(sigma_hat, mu_hat, x, k: int) -> FactorFit:
    """Rescaled-eigenvector factor estimates from a covariance input.

    Loadings are ``V_k Lambda_k^{1/2}`` for the top-k eigenpairs of
    ``sigma_hat``; factor scores are the matching rescaled projections of the
    centered data, so that ``F B^T`` equals the projection of the centered
    data onto the top-k eigenspace. Raises :class:`RankDeficiencyError` if
    the k-th eigenvalue is not positive.
    """
    s = _cov_matrix(sigma_hat)
    mu = as_vector(mu_hat, "mu_hat")
    m = as_matrix(x, "x")
    n, p = m.shape
    if s.shape != (p, p) or mu.shape[0] != p:
        raise DimensionError(
            f"inconsistent shapes: x {m.shape}, sigma {s.shape}, mu {mu.shape}"
        )
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k > p:
        raise DimensionError(f"k={k} exceeds dimension p={p}")
    eigen = eig_sym(s)
    lam = eigen.values[:k]
    if lam[-1] <= 0:
        raise RankDeficiencyError(
            f"top-{k} eigenvalues must be positive, got lambda_{k} = {lam[-1]:.3e}"
        )
    v = eigen.vectors[:, :k]
    loadings = v * np.sqrt(lam)
    centered = m - mu
    factors = centered @ (v / np.sqrt(lam))
    residuals = centered - factors @ loadings.T
    return FactorFit(mu, loadings, factors, residuals, lam.copy())


def _check_eigvals(eigvals, k_max):
    lam = as_vector(eigvals, "eigvals")
    if np.any(lam < -1e-12 * max(1.0, float(np.max(np.abs(lam), initial=0.0)))):
        raise ValueError("eigenvalues must be nonnegative")
    lam = np.maximum(lam, 0.0)
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    return lam


def k_ratio(eigvals, k_max: int = 15) -> KSelection:
    """Eigenvalue-ratio estimator: argmax of consecutive ratios.

    Zero denominators are floored at ``1e-12 * lambda_1``; ties go to the
    smallest index. Requires ``k_max + 1`` eigenvalues.
    """
    lam = _check_eigvals(eigvals, k_max)
    if k_max + 1 > lam.shape[0]:
        raise DimensionError(
            f"need k_max + 1 = {k_max + 1} eigenvalues, got {lam.shape[0]}"
        )
    if lam[0] <= 0:
        raise ValueError("all eigenvalues are zero")
    floor = 1e-12 * lam[0]
    ratios = lam[:k_max] / np.maximum(lam[1:k_max + 1], floor)
    k_hat = int(np.argmax(ratios)) + 1
    return KSelection(k_hat, "ratio", {"eigvals": lam, "ratios": ratios})


def k_diff(eigvals, delta: float, k_max: int = 15) -> KSelection:
    """Eigenvalue-difference estimator: largest i with a gap of at least delta.

    Returns ``k_hat = 0`` when no index qualifies.
    """
    lam = _check_eigvals(eigvals, k_max)
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if k_max + 1 > lam.shape[0]:
        raise DimensionError(
            f"need k_max + 1 = {k_max + 1} eigenvalues, got {lam.shape[0]}"
        )
    diffs = lam[:k_max] - lam[1:k_max + 1]
    qualifying = np.nonzero(diffs >= delta)[0]
    k_hat = int(qualifying[-1]) + 1 if qualifying.size else 0
    return KSelection(k_hat, "difference", {"eigvals": lam, "diffs": diffs, "delta": delta})


def k_info(eigvals, n: int, p: int, k_max: int = 15,
           sigma2_hat: float | None = None) -> KSelection:
    """Information-criterion estimator with penalty ``k sigma^2 g(n, p)``.

    ``V(k) = p^-1 sum_{j>k} lambda_j`` is the scaled residual mass and
    ``g(n, p) = ((n+p)/(np)) log(np/(n+p))``. The default noise plug-in is
    ``sigma2_hat = V(k_max)``; ties go to the smallest k.
    """
    lam = _check_eigvals(eigvals, k_max)
    if k_max > min(n, p) - 1:
        raise ValueError(f"k_max={k_max} must be at most min(n, p) - 1")
    tails = np.concatenate([[lam.sum()], lam.sum() - np.cumsum(lam)])
    v = tails[:k_max + 1] / p
    if sigma2_hat is None:
        sigma2_hat = float(v[k_max])
    g = (n + p) / (n * p) * math.log(n * p / (n + p))
    pc = v + np.arange(k_max + 1) * sigma2_hat * g
    k_hat = int(np.argmin(pc))
    return KSelection(
        k_hat, "info_criterion",
        {"eigvals": lam, "pc": pc, "v": v, "sigma2_hat": sigma2_hat, "g": g},
    )


def pervasiveness_diag(loadings, sigma_u_hat) -> dict:
    """Spike-versus-noise diagnostic: ``lambda_k(B^T B) / ||Sigma_u||_2``.

    Purely informational; there is no pass/fail threshold.
    """
    b = as_matrix(loadings, "loadings")
    su = as_matrix(sigma_u_hat, "sigma_u_hat")
    if b.shape[1] == 0:
        min_spike = 0.0
    else:
        min_spike = float(np.min(np.linalg.eigvalsh(b.T @ b)))
    noise_norm = float(np.linalg.norm(su, 2)) if su.size else 0.0
    if noise_norm > 0:
        ratio = min_spike / noise_norm
    else:
        ratio = math.inf if min_spike > 0 else 0.0
    return {"min_spike": min_spike, "noise_norm": noise_norm, "ratio": ratio}


_COV_BUILDERS = {
    "sample": lambda x, opts: sample_cov(x, demean=True),
    "elementwise": lambda x, opts: elementwise_robust_cov(
        x, opts.get("tau_scale", 0.5)),
    "shrinkage": lambda x, opts: shrinkage_cov(
        x - x.mean(axis=0), opts["tau"]),
    "ustat": lambda x, opts: ustat_cov(x, opts.get("tau", np.inf)),
}


def build_covariance(x, method: str = "sample", **options) -> CovEstimate:
    """Dispatch to one of the covariance estimators by name."""
    if method not in _COV_BUILDERS:
        raise ValueError(
            f"unknown covariance method {method!r}; choose from "
            f"{sorted(_COV_BUILDERS)}"
        )
    return _COV_BUILDERS[method](as_matrix(x, "x"), options)


class FactorModel(BaseEstimator, TransformerMixin):
    """Latent factor extraction by PCA of a (possibly robust) covariance.

    Parameters
    ----------
    n_factors : int or None
        Number of factors. If None, selected from the covariance spectrum
        using ``k_method``.
    k_method : {'ratio', 'diff', 'info'}
        Selection rule used when ``n_factors`` is None.
    k_max : int
        Upper limit handed to the selection rule.
    delta : float or None
        Gap threshold for ``k_method='diff'``.
    cov : {'sample', 'elementwise', 'shrinkage', 'ustat'}
        Covariance input for the PCA step.
    cov_options : dict or None
        Extra keyword arguments for the covariance builder.

    Attributes
    ----------
    mu_ : (p,) mean estimate.
    loadings_ : (p, k) rescaled eigenvectors.
    factors_ : (n, k) factor scores of the training data.
    residuals_ : (n, p) idiosyncratic residuals of the training data.
    eigenvalues_ : top-k covariance eigenvalues.
    n_factors_ : the number of factors actually used.
    """

    def __init__(self, n_factors=None, k_method="ratio", k_max=15, delta=None,
                 cov="sample", cov_options=None):
        self.n_factors = n_factors
        self.k_method = k_method
        self.k_max = k_max
        self.delta = delta
        self.cov = cov
        self.cov_options = cov_options

    def _select_k(self, sigma, n, p):
        eigvals = np.maximum(np.sort(np.linalg.eigvalsh(sigma.matrix))[::-1], 0.0)
        k_max = min(self.k_max, eigvals.shape[0] - 1, min(n, p) - 1)
        if self.k_method == "ratio":
            sel = k_ratio(eigvals, k_max)
        elif self.k_method == "diff":
            if self.delta is None:
                raise ValueError("k_method='diff' requires delta")
            sel = k_diff(eigvals, self.delta, k_max)
        elif self.k_method == "info":
            sel = k_info(eigvals, n, p, k_max)
        else:
            raise ValueError(f"unknown k_method {self.k_method!r}")
        return sel

    def fit(self, X, y=None):
        x = as_matrix(X, "X")
        n, p = x.shape
        sigma = build_covariance(x, self.cov, **(self.cov_options or {}))
        if self.n_factors is None:
            self.k_selection_ = self._select_k(sigma, n, p)
            k = max(self.k_selection_.k_hat, 1)
        else:
            k = self.n_factors
        mu = x.mean(axis=0)
        fit = fit_pca_factors(sigma, mu, x, k)
        self.covariance_input_ = sigma
        self.mu_ = fit.mu_hat
        self.loadings_ = fit.loadings
        self.factors_ = fit.factors
        self.residuals_ = fit.residuals
        self.eigenvalues_ = fit.eigvals
        self.n_factors_ = fit.n_factors
        return self

    def transform(self, X):
        """Factor scores of new data under the fitted rotation."""
        x = as_matrix(X, "X")
        scale = self.loadings_ / self.eigenvalues_
        return (x - self.mu_) @ scale

    def inverse_transform(self, factors):
        """Map factor scores back to the observation space."""
        f = as_matrix(factors, "factors")
        return self.mu_ + f @ self.loadings_.T
