"""Subspace distances and computable eigenvector perturbation bounds.

These functions turn classical perturbation theory into runtime diagnostics:
given a matrix and its perturbed version, they return both the measured
subspace (or entrywise) deviation and the theoretical bound, so callers can
assert the bound empirically.
"""

from typing import NamedTuple

import numpy as np

from ._validation import check_orthonormal_columns, check_same_shape, check_symmetric
from .exceptions import DegenerateGapError, DimensionError, PreconditionError
from .linalg import eig_sym

__all__ = [
    "sin_theta",
    "best_rotation",
    "davis_kahan_bound",
    "weyl_check",
    "signal_eigen_gap",
    "entrywise_pert_bound",
    "entrywise_pert_profile",
    "EntrywiseBound",
]


def sin_theta(basis_a, basis_b, norm: str = "spectral") -> float:
    """sin-theta distance between the column spans of two orthonormal bases.

    ``spectral`` returns ``||P_a - P_b||_2`` (the largest canonical-angle
    sine, in [0, 1]); ``frobenius`` returns the Frobenius norm of the
    diagonal sine matrix, in [0, sqrt(k)]. Both are invariant to the choice
    of basis within each span.
    """
    va = check_orthonormal_columns(basis_a, "basis_a")
    vb = check_orthonormal_columns(basis_b, "basis_b")
    if va.shape != vb.shape:
        raise DimensionError(
            f"bases must have matching shapes, got {va.shape} vs {vb.shape}"
        )
    if va.shape[1] == 0:
        return 0.0
    # singular values of (I - P_a) V_b are exactly the canonical-angle sines;
    # unlike sqrt(1 - cos^2) this loses no precision for tiny angles
    residual = vb - va @ (va.T @ vb)
    sines = np.clip(np.linalg.svd(residual, compute_uv=False), 0.0, 1.0)
    if norm == "spectral":
        return float(np.max(sines))
    if norm == "frobenius":
        return float(np.linalg.norm(sines))
    raise ValueError(f"norm must be 'spectral' or 'frobenius', got {norm!r}")


def best_rotation(basis_tilde, basis) -> np.ndarray:
    """Orthogonal k-by-k matrix R minimizing ``||V_tilde R - V||_F``.

    Computed from the SVD of ``V_tilde^T V`` (orthogonal Procrustes). The
    minimum satisfies the sandwich inequality
    ``||sin Theta||_F <= ||V_tilde R - V||_F <= sqrt(2) ||sin Theta||_F``.
    """
    vt = check_orthonormal_columns(basis_tilde, "basis_tilde")
    v = check_orthonormal_columns(basis, "basis")
    if vt.shape != v.shape:
        raise DimensionError(
            f"bases must have matching shapes, got {vt.shape} vs {v.shape}"
        )
    u, _, wt = np.linalg.svd(vt.T @ v)
    return u @ wt


def weyl_check(a, a_tilde, slack: float = 1e-8) -> bool:
    """Self-test of the eigenvalue stability inequality.

    True iff ``max_j |lambda_j(A~) - lambda_j(A)| <= ||A~ - A||_2 + slack``
    with both spectra sorted in descending order. Always true
    mathematically; exposed so test suites can sweep random instances.
    """
    ma = check_symmetric(a, "a")
    mt = check_symmetric(a_tilde, "a_tilde")
    check_same_shape(ma, mt, "a", "a_tilde")
    la = np.sort(np.linalg.eigvalsh(ma))[::-1]
    lt = np.sort(np.linalg.eigvalsh(mt))[::-1]
    gap = float(np.max(np.abs(lt - la), initial=0.0))
    return gap <= float(np.linalg.norm(mt - ma, 2)) + slack


def davis_kahan_bound(a, a_tilde, k: int) -> float:
    """Constant-2 sin-theta bound ``2 ||A~ - A||_2 / delta_0``.

    ``delta_0`` is the gap between the k-th and (k+1)-th eigenvalue of ``A``
    (descending order), i.e. the separation of the top-k eigenspace from the
    rest of the spectrum. The caller compares the returned value against the
    measured ``sin_theta`` of the computed top-k eigenspaces. Raises
    :class:`DegenerateGapError` when the gap is not positive.
    """
    ma = check_symmetric(a, "a")
    mt = check_symmetric(a_tilde, "a_tilde")
    check_same_shape(ma, mt, "a", "a_tilde")
    n = ma.shape[0]
    if not 1 <= k < n:
        raise DimensionError(f"k must be in [1, {n - 1}], got {k}")
    lam = np.sort(np.linalg.eigvalsh(ma))[::-1]
    # separation of the top-k eigenvalues from the rest of the spectrum
    delta0 = float(lam[k - 1] - lam[k])
    if delta0 <= 0.0:
        raise DegenerateGapError(
            f"eigen-gap separating the top {k} eigenvalues is {delta0:.3e}"
        )
    return 2.0 * float(np.linalg.norm(mt - ma, 2)) / delta0


def _top_k_by_magnitude(values, vectors, k):
    """Select k largest-|value| eigenpairs, then sort them by signed value."""
    sel = np.argsort(np.abs(values))[::-1][:k]
    sel = sel[np.argsort(values[sel])[::-1]]
    return values[sel], vectors[:, sel]


def signal_eigen_gap(signal_values, ell: int) -> float:
    """Gap of the ell-th (0-based) signal eigenvalue.

    ``min(lam_{ell-1} - lam_ell, lam_ell - lam_{ell+1}, |lam_ell|)`` with the
    conventions ``lam_{-1} = +inf`` and ``lam_k = -inf`` past the end, for
    signal eigenvalues sorted in descending order.
    """
    lam = np.asarray(signal_values, dtype=np.float64)
    k = lam.shape[0]
    if not 0 <= ell < k:
        raise DimensionError(f"ell must be in [0, {k - 1}], got {ell}")
    left = np.inf if ell == 0 else float(lam[ell - 1] - lam[ell])
    right = np.inf if ell == k - 1 else float(lam[ell] - lam[ell + 1])
    return min(left, right, abs(float(lam[ell])))


class EntrywiseBound(NamedTuple):
    lhs: float
    rhs: float


def _numerical_rank(values, rel_tol=1e-10):
    top = float(np.max(np.abs(values), initial=0.0))
    if top == 0.0:
        return 0
    return int(np.sum(np.abs(values) > rel_tol * top))


def _entrywise_setup(a, w, ell):
    ma = check_symmetric(a, "a")
    mw = check_symmetric(w, "w")
    check_same_shape(ma, mw, "a", "w")
    base = eig_sym(ma)
    k = _numerical_rank(base.values)
    if k == 0:
        raise PreconditionError("a must have positive rank")
    lam, v = _top_k_by_magnitude(base.values, base.vectors, k)
    if not 0 <= ell < k:
        raise DimensionError(f"ell must be in [0, {k - 1}] for rank {k}")
    w_norm = float(np.linalg.norm(mw, 2))
    delta = signal_eigen_gap(lam, ell)
    if w_norm > 0 and delta < 5.0 * w_norm:
        raise PreconditionError(
            f"eigen-gap condition violated: delta_ell = {delta:.4g} < "
            f"5 ||W||_2 = {5 * w_norm:.4g}"
        )
    if abs(lam[ell]) * 4.0 < float(np.max(np.abs(lam))):
        raise PreconditionError(
            "|lambda_ell| must be within a factor 4 of the largest signal "
            "eigenvalue"
        )
    tilde = eig_sym(ma + mw)
    lam_t, v_t = _top_k_by_magnitude(tilde.values, tilde.vectors, k)
    # sign alignment: maximize the inner product with the unperturbed vector
    vt_ell = v_t[:, ell].copy()
    if float(vt_ell @ v[:, ell]) < 0:
        vt_ell = -vt_ell
    incoherence = np.sqrt(np.sum(v**2, axis=1))
    return ma, mw, k, lam, v, w_norm, delta, vt_ell, incoherence


def _loo_vector(a, w, m, k, ell):
    """ell-th signal eigenvector of A + W^(m), W's m-th row/column zeroed."""
    wm = np.array(w, copy=True)
    wm[m, :] = 0.0
    wm[:, m] = 0.0
    loo = eig_sym(a + wm)
    _, v_loo = _top_k_by_magnitude(loo.values, loo.vectors, k)
    return v_loo[:, ell]


def entrywise_pert_bound(a, w, ell: int, m: int) -> EntrywiseBound:
    """Measured entrywise eigenvector deviation and its theoretical bound.

    ``lhs`` is ``|[v~_ell - v_ell]_m|`` after sign alignment. ``rhs`` is the
    computable right-hand side built from the spectral norm of ``W``, the
    eigen-gap, the local incoherence factor and the leave-one-out inner
    product ``|<w_m, v~_ell^(m)>|``. Indices ``ell`` and ``m`` are 0-based.
    """
    ma, mw, k, lam, v, w_norm, delta, vt_ell, inco = _entrywise_setup(a, w, ell)
    n = ma.shape[0]
    if not 0 <= m < n:
        raise DimensionError(f"m must be in [0, {n - 1}], got {m}")
    lhs = abs(float(vt_ell[m] - v[m, ell]))
    v_loo = _loo_vector(ma, mw, m, k, ell)
    rhs = (w_norm / delta) * float(inco[m]) + abs(float(mw[:, m] @ v_loo)) / delta
    return EntrywiseBound(lhs, rhs)


def entrywise_pert_profile(a, w, ell: int):
    """Vectorized :func:`entrywise_pert_bound` over every entry ``m``.

    Returns ``(lhs, rhs)`` arrays of length n. Shares one eigendecomposition
    of ``A`` and ``A + W`` across all entries; each entry still pays for its
    own leave-one-out eigendecomposition.
    """
    ma, mw, k, lam, v, w_norm, delta, vt_ell, inco = _entrywise_setup(a, w, ell)
    n = ma.shape[0]
    lhs = np.abs(vt_ell - v[:, ell])
    rhs = np.empty(n)
    for m in range(n):
        v_loo = _loo_vector(ma, mw, m, k, ell)
        rhs[m] = (w_norm / delta) * inco[m] + abs(float(mw[:, m] @ v_loo)) / delta
    return lhs, rhs
