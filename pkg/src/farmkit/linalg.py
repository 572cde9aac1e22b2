"""Dense symmetric eigendecomposition, thin SVD and the dilation embedding.

Decompositions follow a deterministic sign convention: the largest-magnitude
entry of every eigenvector (left singular vector) is positive, with ties
broken by the lowest index. This makes repeated runs and cross-module
comparisons reproducible.
"""

from typing import NamedTuple

import numpy as np

from ._validation import as_matrix, check_symmetric
from .exceptions import ConvergenceError, DimensionError

__all__ = ["EigenSystem", "SvdSystem", "eig_sym", "eig_top_k", "svd", "dilate"]


class EigenSystem(NamedTuple):
    """Eigenvalues with matching unit-norm eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


class SvdSystem(NamedTuple):
    """Thin SVD: nonnegative singular values in descending order."""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray


def _fix_signs(vectors, companions=None):
    """Flip column signs so the largest-magnitude entry is positive.

    ``np.argmax`` returns the first maximizer, which implements the
    lowest-index tie-break. If ``companions`` is given, its columns are
    flipped in lockstep (used to keep SVD factor pairs consistent).
    """
    vectors = np.array(vectors, copy=True)
    if vectors.size == 0:
        return (vectors, companions) if companions is not None else vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs
    if companions is not None:
        companions = companions * signs
        return vectors, companions
    return vectors


def eig_sym(a) -> EigenSystem:
    """Full eigendecomposition of a symmetric matrix.

    Eigenvalues are sorted in descending order (by value). Raises
    :class:`DimensionError` for non-square or asymmetric input.
    """
    m = check_symmetric(a, "eig_sym input")
    values, vectors = np.linalg.eigh(m)
    # stable descending sort keeps the solver's order within tied eigenvalues
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    return EigenSystem(values, vectors)


def eig_top_k(a, k: int, seed: int = 0, tol: float = 1e-10,
              max_iters: int = 10_000) -> EigenSystem:
    """Top-``k`` eigenpairs by absolute value via block power iteration.

    Uses a seeded random orthonormal start, re-orthonormalizes every step and
    extracts Ritz pairs; stops when the subspace residual
    ``||A V - V diag(vals)||_F`` falls below ``tol * (1 + max |val|)``.
    Raises :class:`ConvergenceError` (carrying the last residual) if the
    iteration does not converge, e.g. when ``|lambda_k| == |lambda_{k+1}|``.
    """
    m = check_symmetric(a, "eig_top_k input")
    n = m.shape[0]
    if not 1 <= k <= n:
        raise DimensionError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    residual = np.inf
    for _ in range(max_iters):
        z = m @ q
        q, _ = np.linalg.qr(z)
        small = q.T @ m @ q
        small = 0.5 * (small + small.T)
        ritz_vals, ritz_vecs = np.linalg.eigh(small)
        order = np.argsort(np.abs(ritz_vals))[::-1]
        ritz_vals = ritz_vals[order]
        v = q @ ritz_vecs[:, order]
        residual = float(np.linalg.norm(m @ v - v * ritz_vals))
        if residual <= tol * (1.0 + float(np.max(np.abs(ritz_vals), initial=0.0))):
            return EigenSystem(ritz_vals, _fix_signs(v))
        q = v
    raise ConvergenceError(
        f"block power iteration did not reach tolerance {tol:.0e} in "
        f"{max_iters} iterations (residual {residual:.3e})",
        residual=residual,
    )


def svd(a) -> SvdSystem:
    """Thin SVD with the package sign convention on the left factors."""
    m = as_matrix(a, "svd input")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    u, v = _fix_signs(u, companions=vt.T)
    return SvdSystem(s, u, v)


def dilate(a) -> np.ndarray:
    """Symmetric dilation ``[[0, L], [L^T, 0]]`` of an n-by-p matrix.

    Its nonzero eigenvalues are the plus/minus singular value pairs of ``L``,
    with eigenvectors ``(u_k, +/- v_k) / sqrt(2)``.
    """
    m = as_matrix(a, "dilate input")
    n, p = m.shape
    out = np.zeros((n + p, n + p))
    out[:n, n:] = m
    out[n:, :n] = m.T
    return out
