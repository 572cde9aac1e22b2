"""Robust estimators of means, second moments and covariance matrices.

Data matrices are oriented the scikit-learn way throughout the package:
``X`` has shape ``(n_samples, n_features)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, as_vector
from .exceptions import ConvergenceError, DimensionError

__all__ = [
    "HuberConfig",
    "CovEstimate",
    "sample_mean",
    "sample_cov",
    "truncated_mean",
    "huber_mean",
    "huber_loss",
    "default_tau",
    "elementwise_robust_cov",
    "shrinkage_cov",
    "default_shrinkage_tau",
    "ustat_cov",
]


@dataclass
class HuberConfig:
    """Robustification parameter and solver controls for the Huber loss."""

    tau: float
    max_iters: int = 100
    tol: float = 1e-10

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass
class CovEstimate:
    """A p-by-p covariance estimate plus provenance metadata."""

    matrix: np.ndarray
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        m = as_matrix(self.matrix, "covariance matrix")
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"covariance must be square, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
        if m.size and float(np.max(np.abs(m - m.T))) > 1e-10 * scale:
            raise ValueError("covariance estimate is not symmetric")
        self.matrix = 0.5 * (m + m.T)

    @property
    def shape(self):
        return self.matrix.shape


def sample_mean(x) -> np.ndarray:
    """Per-feature arithmetic mean."""
    m = as_matrix(x, "x")
    if m.shape[0] == 0:
        raise DimensionError("need at least one sample")
    return m.mean(axis=0)


def sample_cov(x, demean: bool = True) -> CovEstimate:
    """Sample covariance with divisor n: ``n^-1 sum (x_i - mu)(x_i - mu)^T``.

    With ``demean=False`` the second-moment matrix ``n^-1 sum x_i x_i^T`` is
    returned instead (the mean is taken to be zero).
    """
    m = as_matrix(x, "x")
    n = m.shape[0]
    if n < (2 if demean else 1):
        raise DimensionError(f"need at least {2 if demean else 1} samples")
    c = m - m.mean(axis=0) if demean else m
    return CovEstimate(c.T @ c / n, "sample", {"demean": demean, "n": n})


def truncated_mean(x, tau: float) -> float:
    """Mean of ``sign(x) * min(|x|, tau)``. ``tau=inf`` gives the plain mean."""
    v = as_vector(x, "x")
    if v.shape[0] == 0:
        raise DimensionError("truncated_mean of empty input")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if np.isinf(tau):
        return float(v.mean())
    return float(np.mean(np.sign(v) * np.minimum(np.abs(v), tau)))


def huber_loss(u, tau):
    """Elementwise Huber loss: quadratic inside ``[-tau, tau]``, linear outside."""
    u = np.asarray(u, dtype=np.float64)
    a = np.abs(u)
    return np.where(a <= tau, 0.5 * u**2, tau * a - 0.5 * tau**2)


def huber_mean(x, cfg: HuberConfig) -> float:
    """Huber M-estimator of location.

    Solves the first-order condition ``sum psi_tau(x_i - theta) = 0`` by
    iteratively reweighted least squares started at the sample mean. The
    total loss is checked to be non-increasing at every step and the result
    always lies in ``[min x, max x]``. ``tau = inf`` returns the sample mean
    exactly.
    """
    v = as_vector(x, "x")
    if v.shape[0] == 0:
        raise DimensionError("huber_mean of empty input")
    theta = float(v.mean())
    if np.isinf(cfg.tau):
        return theta
    loss = float(huber_loss(v - theta, cfg.tau).sum())
    scale = max(1.0, float(np.max(np.abs(v))))
    for _ in range(cfg.max_iters):
        r = v - theta
        a = np.abs(r)
        weights = np.where(a <= cfg.tau, 1.0, cfg.tau / np.maximum(a, 1e-300))
        new_theta = float(np.sum(weights * v) / np.sum(weights))
        new_loss = float(huber_loss(v - new_theta, cfg.tau).sum())
        if new_loss > loss + 1e-12 * (1.0 + loss):
            raise ConvergenceError(
                "Huber IRLS loss increased; this should not happen",
                residual=new_loss - loss,
            )
        converged = abs(new_theta - theta) <= cfg.tol * scale
        theta, loss = new_theta, new_loss
        if converged:
            return theta
    raise ConvergenceError(
        f"Huber IRLS did not converge in {cfg.max_iters} iterations",
        residual=abs(new_theta - theta),
    )


def huber_mean_columns(x, taus, max_iters: int = 100, tol: float = 1e-10) -> np.ndarray:
    """Columnwise :func:`huber_mean`, vectorized.

    ``taus`` holds one robustification level per column (``inf`` allowed).
    Each column follows exactly the scalar IRLS updates and is frozen once
    converged, so the result matches per-column :func:`huber_mean` calls.
    """
    m = as_matrix(x, "x")
    t = np.asarray(taus, dtype=np.float64)
    n, p = m.shape
    if t.shape != (p,):
        raise DimensionError(f"taus must have shape ({p},), got {t.shape}")
    if n == 0:
        raise DimensionError("huber_mean_columns of empty input")
    if np.any(t <= 0):
        raise ValueError("all taus must be positive")
    theta = m.mean(axis=0)
    active = ~np.isinf(t)
    if not np.any(active):
        return theta
    scale = np.maximum(1.0, np.max(np.abs(m), axis=0))
    for _ in range(max_iters):
        idx = np.nonzero(active)[0]
        cols = m[:, idx]
        r = np.abs(cols - theta[idx])
        w = np.where(r <= t[idx], 1.0, t[idx] / np.maximum(r, 1e-300))
        new_theta = np.sum(w * cols, axis=0) / np.sum(w, axis=0)
        done = np.abs(new_theta - theta[idx]) <= tol * scale[idx]
        theta[idx] = new_theta
        active[idx] = ~done
        if not np.any(active):
            return theta
    raise ConvergenceError(
        f"Huber IRLS did not converge for {int(active.sum())} columns in "
        f"{max_iters} iterations"
    )


def default_tau(n: int, p: int, scale: float) -> float:
    """Adaptive robustification level ``scale * sqrt(n / log(n p))``."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be at least 1")
    if n * p <= math.e:
        raise ValueError(f"n*p = {n * p} too small: log(n p) must exceed 1")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return scale * math.sqrt(n / math.log(n * p))


def _truncated_col_means(cols, taus):
    """Truncated mean of each column of ``cols`` at its own tau (inf allowed)."""
    clipped = np.sign(cols) * np.minimum(np.abs(cols), taus)
    return clipped.mean(axis=0)


def elementwise_robust_cov(x, tau_scale: float) -> CovEstimate:
    """Entrywise truncated-moment covariance for heavy-tailed data.

    Each entry ``sigma_jk = E(X_j X_k) - E X_j E X_k`` is built from
    truncated means. The truncation level of every mean estimation is
    ``tau_scale * sd(sequence) * sqrt(n)`` where the sequence is either a
    coordinate or a coordinate product; a zero-variance sequence is left
    untruncated.
    """
    m = as_matrix(x, "x")
    n, p = m.shape
    if n < 2:
        raise DimensionError("need at least 2 samples")
    if not tau_scale > 0:
        raise ValueError(f"tau_scale must be positive, got {tau_scale}")
    root_n = math.sqrt(n)

    def taus_for(cols):
        sd = cols.std(axis=0, ddof=1)
        t = tau_scale * sd * root_n
        return np.where(sd > 0, t, np.inf)

    mu = _truncated_col_means(m, taus_for(m))
    cov = np.empty((p, p))
    for j in range(p):
        prods = m[:, j:] * m[:, j:j + 1]
        cross = _truncated_col_means(prods, taus_for(prods))
        cov[j, j:] = cross - mu[j] * mu[j:]
        cov[j:, j] = cov[j, j:]
    return CovEstimate(
        cov, "elementwise_truncated", {"tau_scale": tau_scale, "n": n}
    )


def shrinkage_cov(x, tau: float) -> CovEstimate:
    """l4-norm shrinkage covariance ``n^-1 sum x~_i x~_i^T``.

    Each observation is rescaled to ``(||x_i||_4 ^ tau) x_i / ||x_i||_4`` so
    its 4-norm never exceeds ``tau``; a zero observation maps to zero. The
    estimator assumes mean-zero data (demean beforehand if needed) and is
    positive semidefinite by construction.
    """
    m = as_matrix(x, "x")
    n = m.shape[0]
    if n < 1:
        raise DimensionError("need at least one sample")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    norms4 = np.sum(m**4, axis=1) ** 0.25
    factor = np.where(norms4 > 0, np.minimum(norms4, tau) / np.maximum(norms4, 1e-300), 0.0)
    shrunk = m * factor[:, None]
    return CovEstimate(shrunk.T @ shrunk / n, "l4_shrinkage", {"tau": tau, "n": n})


def default_shrinkage_tau(x, delta: float) -> float:
    """Plug-in level ``(n R_hat / (delta log p))^(1/4)`` for :func:`shrinkage_cov`.

    ``R_hat`` is the empirical fourth-moment bound restricted to coordinate
    directions, ``max_j n^-1 sum_i x_ij^4``. Searching all unit vectors is
    infeasible, so this proxy underestimates the supremum in general.
    """
    m = as_matrix(x, "x")
    n, p = m.shape
    if p < 2:
        raise DimensionError("need at least 2 features")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    r_hat = float(np.max(np.mean(m**4, axis=0)))
    return (n * r_hat / (delta * math.log(p))) ** 0.25


def ustat_cov(x, tau: float) -> CovEstimate:
    """Shrunk U-statistic covariance from pairwise differences.

    Averages ``min(1, tau / ||x_j - x_k||^2) (x_j - x_k)(x_j - x_k)^T / 2``
    over unordered sample pairs. ``tau = inf`` recovers the unbiased sample
    covariance exactly; the output is positive semidefinite for any ``tau``.
    """
    m = as_matrix(x, "x")
    n = m.shape[0]
    if n < 2:
        raise DimensionError("need at least 2 samples")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    gram = m @ m.T
    sq = np.diag(gram)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
    if np.isinf(tau):
        w = np.ones_like(d2)
    else:
        with np.errstate(divide="ignore"):
            w = np.minimum(1.0, np.where(d2 > 0, tau / d2, 1.0))
    np.fill_diagonal(w, 0.0)
    # sum_{j<k} w_jk d d^T equals X^T (D - W) X with D = diag(W 1)
    lap = np.diag(w.sum(axis=1)) - w
    cov = m.T @ lap @ m / (n * (n - 1))
    cov = 0.5 * (cov + cov.T)
    return CovEstimate(cov, "u_statistic", {"tau": tau, "n": n})
