"""Small input-validation helpers used across estimators and functions."""

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, NonFiniteInput

__all__ = ["as_rng", "check_finite", "check_count_matrix", "check_probability_vector"]


def as_rng(seed):
    """Return a ``numpy.random.Generator`` from a seed or pass one through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_finite(arr, name="array"):
    """Return ``arr`` as a float ndarray, raising ``NonFiniteInput`` on NaN/inf."""
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains non-finite values")
    return arr


def check_count_matrix(X, n_features=None):
    """Coerce ``X`` to a CSR matrix of nonnegative float counts.

    Accepts dense arrays or any scipy sparse format. ``n_features`` pins the
    expected vocabulary size.
    """
    if sp.issparse(X):
        X = X.tocsr().astype(float)
    else:
        X = sp.csr_matrix(np.asarray(X, dtype=float))
    if X.nnz and X.data.min() < 0:
        raise DimensionMismatch("count matrix has negative entries")
    if n_features is not None and X.shape[1] != n_features:
        raise DimensionMismatch(
            f"count matrix has {X.shape[1]} columns, expected {n_features}"
        )
    return X


def check_probability_vector(p, name="p", atol=1e-6):
    """Validate that ``p`` is a probability vector; returns it as ndarray."""
    p = check_finite(p, name)
    if p.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-dimensional")
    if np.any(p < -atol) or abs(p.sum() - 1.0) > atol:
        raise DimensionMismatch(f"{name} is not a probability vector")
    return p
