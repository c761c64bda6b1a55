"""Probability-space transforms shared by the generative and inference code."""

import numpy as np

from .errors import NonFiniteInput, NonPositiveAlpha
from .validation import as_rng

__all__ = ["softmax", "log_softmax", "sample_dirichlet"]


def softmax(v, axis=-1):
    """Map a real vector to a probability vector via exp-normalization.

    Computed with max-subtraction so arbitrarily shifted inputs are safe;
    the output sums to 1 along ``axis`` to within 1e-12.

    Parameters
    ----------
    v : array-like of float
        Finite natural parameters. May be any shape; the transform is
        applied along ``axis``.

    Raises
    ------
    NonFiniteInput
        If ``v`` contains NaN or infinity.
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("softmax input contains non-finite values")
    shifted = v - np.max(v, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(v, axis=-1):
    """Log of :func:`softmax`, computed without leaving log space."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("log_softmax input contains non-finite values")
    shifted = v - np.max(v, axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def sample_dirichlet(alpha, rng):
    """Draw one probability vector from a Dirichlet distribution.

    The marginal mean of coordinate ``i`` is ``alpha[i] / alpha.sum()``.

    Parameters
    ----------
    alpha : array-like of float
        Concentration parameters, all strictly positive.
    rng : numpy.random.Generator or int
        Source of randomness (a seed is accepted).

    Raises
    ------
    NonPositiveAlpha
        If any entry of ``alpha`` is <= 0 (or non-finite).
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise NonPositiveAlpha("alpha must be a non-empty 1-d vector")
    if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
        raise NonPositiveAlpha("all Dirichlet parameters must be > 0")
    return as_rng(rng).dirichlet(alpha)
