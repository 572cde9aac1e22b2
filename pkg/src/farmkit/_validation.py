"""Input validation helpers used across the package.

All public entry points funnel array inputs through these checks so that
shape and symmetry errors surface with a clear message instead of a numpy
broadcasting failure deep inside a computation.
"""

import numpy as np

from .exceptions import DimensionError

__all__ = [
    "as_matrix",
    "as_vector",
    "check_square",
    "check_symmetric",
    "check_orthonormal_columns",
    "check_same_shape",
]


def as_matrix(a, name="input"):
    """Coerce to a 2-d float64 array with finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(a, name="input"):
    """Coerce to a 1-d float64 array with finite entries."""
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-dimensional, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_square(a, name="matrix"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def check_symmetric(a, name="matrix", tol=1e-10):
    """Validate symmetry up to ``tol`` relative to the largest entry.

    Returns the exactly symmetrized matrix so downstream eigensolvers see a
    bitwise-symmetric input.
    """
    m = check_square(a, name)
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > tol * scale:
        raise DimensionError(
            f"{name} must be symmetric: max asymmetry {asym:.3e} exceeds "
            f"{tol:.0e} * {scale:.3e}"
        )
    return 0.5 * (m + m.T)


def check_orthonormal_columns(a, name="basis", tol=1e-8):
    m = as_matrix(a, name)
    if m.shape[1] > m.shape[0]:
        raise DimensionError(
            f"{name} has more columns than rows ({m.shape}); cannot be "
            "column-orthonormal"
        )
    gram = m.T @ m
    err = float(np.max(np.abs(gram - np.eye(m.shape[1]))))
    if err > tol:
        raise ValueError(
            f"{name} columns are not orthonormal: max Gram deviation {err:.3e}"
        )
    return m


def check_same_shape(a, b, name_a="first input", name_b="second input"):
    if a.shape != b.shape:
        raise DimensionError(
            f"{name_a} and {name_b} must have the same shape: "
            f"{a.shape} vs {b.shape}"
        )
