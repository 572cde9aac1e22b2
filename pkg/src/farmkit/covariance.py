"""Structured covariance estimation: observed-factor regression and POET.

Both estimators share the low-rank-plus-sparse recipe: remove the factor
part, threshold what is left entrywise, and add the two pieces back
together.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_matrix, check_symmetric
from .exceptions import DimensionError, RankDeficiencyError
from .linalg import eig_sym
from .robust import CovEstimate, sample_cov

__all__ = [
    "ThresholdRule",
    "StructuredCov",
    "threshold_cov",
    "observed_factor_cov",
    "poet",
    "default_omega_observed",
    "default_omega_poet",
    "entropy_loss_norm",
    "ObservedFactorCovariance",
    "PoetCovariance",
]

SCAD_A = 3.7


@dataclass
class ThresholdRule:
    """Entrywise thresholding rule for off-diagonal covariance entries.

    ``kind`` picks the generalized thresholding function (hard, soft or
    SCAD), ``level_mode`` decides whether ``omega`` applies to covariances
    directly or to correlations (scaled back afterwards). The diagonal is
    never touched. ``psd_repair`` optionally clips eigenvalues at
    ``1e-8 * trace / p`` after thresholding; the raw estimator is not
    guaranteed positive semidefinite.
    """

    kind: str = "soft"
    level_mode: str = "correlation_adaptive"
    omega: float = 0.1
    preserve_diagonal: bool = True
    psd_repair: bool = False
    scad_a: float = SCAD_A

    def __post_init__(self):
        if self.kind not in ("hard", "soft", "scad"):
            raise ValueError(f"unknown threshold kind {self.kind!r}")
        if self.level_mode not in ("absolute", "correlation_adaptive"):
            raise ValueError(f"unknown level_mode {self.level_mode!r}")
        if self.omega < 0:
            raise ValueError(f"omega must be nonnegative, got {self.omega}")
        if not self.preserve_diagonal:
            raise ValueError("the diagonal is always preserved")
        if self.scad_a <= 2:
            raise ValueError(f"scad_a must exceed 2, got {self.scad_a}")


@dataclass
class StructuredCov:
    """Low-rank plus thresholded-sparse covariance decomposition."""

    total: CovEstimate
    lowrank: np.ndarray
    sparse_resid: np.ndarray
    n_factors: int


def _apply_threshold(values, omega, kind, a):
    """Generalized thresholding: s(z) = 0 for |z| <= omega, |s(z)-z| <= omega."""
    z = np.asarray(values, dtype=np.float64)
    if omega == 0:
        return z.copy()
    if kind == "hard":
        return np.where(np.abs(z) > omega, z, 0.0)
    if kind == "soft":
        return np.sign(z) * np.maximum(np.abs(z) - omega, 0.0)
    az = np.abs(z)
    soft = np.sign(z) * np.maximum(az - omega, 0.0)
    mid = ((a - 1.0) * z - np.sign(z) * a * omega) / (a - 2.0)
    out = np.where(az <= 2.0 * omega, soft, np.where(az <= a * omega, mid, z))
    return out


def threshold_cov(s, rule: ThresholdRule) -> np.ndarray:
    """Threshold off-diagonal entries of a symmetric matrix.

    In ``correlation_adaptive`` mode the entries are converted to
    correlations, thresholded at ``rule.omega`` and scaled back, which makes
    the operation scale equivariant. Raises for a nonpositive diagonal in
    that mode.
    """
    m = check_symmetric(s, "threshold_cov input")
    diag = np.diag(m).copy()
    if rule.level_mode == "correlation_adaptive":
        if np.any(diag <= 0):
            raise ValueError(
                "correlation-adaptive thresholding needs a positive diagonal"
            )
        d = np.sqrt(diag)
        corr = m / np.outer(d, d)
        thr = _apply_threshold(corr, rule.omega, rule.kind, rule.scad_a)
        out = thr * np.outer(d, d)
    else:
        scale = max(1.0, float(np.max(np.abs(diag))))
        if np.any(diag < -1e-10 * scale):
            raise ValueError("diagonal entries must be nonnegative")
        out = _apply_threshold(m, rule.omega, rule.kind, rule.scad_a)
    np.fill_diagonal(out, diag)
    out = 0.5 * (out + out.T)
    if rule.psd_repair:
        # eigenvalue clipping necessarily perturbs the diagonal
        vals, vecs = np.linalg.eigh(out)
        floor = 1e-8 * np.trace(out) / out.shape[0]
        vals = np.maximum(vals, floor)
        out = (vecs * vals) @ vecs.T
        out = 0.5 * (out + out.T)
    return out


def observed_factor_cov(x, f, rule: ThresholdRule) -> StructuredCov:
    """Covariance estimate when the factors are observed.

    Per-feature OLS of the data on ``(1, f)`` yields intercepts and
    loadings; the residual covariance is thresholded and added back to
    ``B cov(f) B^T`` where ``cov(f)`` is the sample covariance of the
    factors.
    """
    xm = as_matrix(x, "x")
    fm = as_matrix(f, "f")
    n, p = xm.shape
    k = fm.shape[1]
    if fm.shape[0] != n:
        raise DimensionError(f"x has {n} samples but f has {fm.shape[0]}")
    if n <= k + 1:
        raise DimensionError(f"need n > k + 1 samples, got n={n}, k={k}")
    design = np.column_stack([np.ones(n), fm])
    gram = design.T @ design
    if np.linalg.matrix_rank(gram) < k + 1:
        raise RankDeficiencyError("singular regression design (1, f)")
    coefs = np.linalg.solve(gram, design.T @ xm)   # (k+1, p)
    loadings = coefs[1:].T                          # (p, k)
    resid = xm - design @ coefs
    s_u = resid.T @ resid / n
    sparse_resid = threshold_cov(s_u, rule)
    f_centered = fm - fm.mean(axis=0)
    cov_f = f_centered.T @ f_centered / n
    lowrank = loadings @ cov_f @ loadings.T
    lowrank = 0.5 * (lowrank + lowrank.T)  # total = lowrank + sparse exactly
    total = CovEstimate(
        lowrank + sparse_resid, "observed_factor",
        {"n_factors": k, "omega": rule.omega, "kind": rule.kind,
         "level_mode": rule.level_mode},
    )
    return StructuredCov(total, lowrank, sparse_resid, k)


def poet(x, k: int, rule: ThresholdRule, demean: bool = True) -> StructuredCov:
    """Principal orthogonal complement thresholding.

    The top-k principal part of the sample covariance is kept as is; the
    orthogonal complement is thresholded entrywise. ``demean`` controls
    whether the sample covariance is taken about the sample mean (default)
    or about zero.
    """
    xm = as_matrix(x, "x")
    n, p = xm.shape
    if not 0 <= k < min(n, p):
        raise DimensionError(f"k must satisfy 0 <= k < min(n, p) = {min(n, p)}")
    s = sample_cov(xm, demean=demean).matrix
    if k == 0:
        lowrank = np.zeros_like(s)
        s_u = s
    else:
        eigen = eig_sym(s)
        lam, v = eigen.values[:k], eigen.vectors[:, :k]
        lowrank = (v * lam) @ v.T
        lowrank = 0.5 * (lowrank + lowrank.T)  # total = lowrank + sparse exactly
        s_u = s - lowrank
    sparse_resid = threshold_cov(s_u, rule)
    total = CovEstimate(
        lowrank + sparse_resid, "poet",
        {"n_factors": k, "omega": rule.omega, "kind": rule.kind,
         "level_mode": rule.level_mode, "demean": demean},
    )
    return StructuredCov(total, lowrank, sparse_resid, k)


def default_omega_observed(n: int, p: int, k: int, c: float = 0.5) -> float:
    """Threshold level ``c * k * sqrt(log p / n)`` for observed factors."""
    if n < 2 or p < 2 or k < 0:
        raise ValueError("need n >= 2, p >= 2, k >= 0")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    return c * k * math.sqrt(math.log(p) / n)


def default_omega_poet(n: int, p: int, c: float = 0.5) -> float:
    """Threshold level ``c * (sqrt(log p / n) + 1/sqrt(p))`` for POET.

    The extra ``1/sqrt(p)`` term accounts for the factors being latent.
    """
    if n < 2 or p < 2:
        raise ValueError("need n >= 2 and p >= 2")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    return c * (math.sqrt(math.log(p) / n) + 1.0 / math.sqrt(p))


def entropy_loss_norm(a, sigma) -> float:
    """Relative norm ``p^{-1/2} ||Sigma^{-1/2} A Sigma^{-1/2}||_F``.

    ``sigma`` must be symmetric positive definite; ``a`` is typically an
    estimation error matrix measured relative to it.
    """
    am = check_symmetric(a, "a")
    sm = check_symmetric(sigma, "sigma")
    if am.shape != sm.shape:
        raise DimensionError(f"shape mismatch: {am.shape} vs {sm.shape}")
    vals, vecs = np.linalg.eigh(sm)
    if vals[0] <= 0:
        raise ValueError(
            f"sigma must be positive definite; min eigenvalue {vals[0]:.3e}"
        )
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.T
    p = sm.shape[0]
    return float(np.linalg.norm(inv_sqrt @ am @ inv_sqrt, "fro") / math.sqrt(p))


class _ThresholdedCovarianceMixin:
    def _rule(self, n, p, k):
        omega = self.omega
        if omega is None:
            omega = self._default_omega(n, p, k)
        return ThresholdRule(
            kind=self.kind, level_mode=self.level_mode, omega=omega,
            psd_repair=self.psd_repair,
        )


class ObservedFactorCovariance(BaseEstimator, _ThresholdedCovarianceMixin):
    """Covariance estimator for data with observed factors.

    ``fit(X, F)`` runs the regression-plus-thresholding pipeline; the result
    lands in ``covariance_`` with the split kept in ``lowrank_`` and
    ``sparse_resid_``. ``omega=None`` uses the default level
    ``c k sqrt(log p / n)``.
    """

    def __init__(self, kind="soft", level_mode="correlation_adaptive",
                 omega=None, c=0.5, psd_repair=False):
        self.kind = kind
        self.level_mode = level_mode
        self.omega = omega
        self.c = c
        self.psd_repair = psd_repair

    def _default_omega(self, n, p, k):
        return default_omega_observed(n, p, k, self.c)

    def fit(self, X, F):
        x = as_matrix(X, "X")
        f = as_matrix(F, "F")
        rule = self._rule(x.shape[0], x.shape[1], f.shape[1])
        result = observed_factor_cov(x, f, rule)
        self.rule_ = rule
        self.covariance_ = result.total.matrix
        self.lowrank_ = result.lowrank
        self.sparse_resid_ = result.sparse_resid
        self.n_factors_ = result.n_factors
        return self


class PoetCovariance(BaseEstimator, _ThresholdedCovarianceMixin):
    """POET covariance estimator for data with latent factors."""

    def __init__(self, n_factors=1, kind="soft",
                 level_mode="correlation_adaptive", omega=None, c=0.5,
                 demean=True, psd_repair=False):
        self.n_factors = n_factors
        self.kind = kind
        self.level_mode = level_mode
        self.omega = omega
        self.c = c
        self.demean = demean
        self.psd_repair = psd_repair

    def _default_omega(self, n, p, k):
        return default_omega_poet(n, p, self.c)

    def fit(self, X, y=None):
        x = as_matrix(X, "X")
        rule = self._rule(x.shape[0], x.shape[1], self.n_factors)
        result = poet(x, self.n_factors, rule, demean=self.demean)
        self.rule_ = rule
        self.covariance_ = result.total.matrix
        self.lowrank_ = result.lowrank
        self.sparse_resid_ = result.sparse_resid
        return self
