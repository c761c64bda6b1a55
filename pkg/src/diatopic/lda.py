"""Batch variational EM for latent topic mixtures (single time slice).

The per-document posterior over topic proportions is a Dirichlet with
variational parameter gamma; per-word topic responsibilities are
multinomial and never materialized (expected counts fall out of rescaled
matrix products). Document updates are warm-started from the previous EM
iteration and the statistics handed to the M-step are recomputed from the
final gamma, which makes every EM iteration a coordinate-ascent step: the
variational bound is non-decreasing up to floating point noise.

Batch EM is prone to poor local optima under weak random initialization,
so topics are seeded from randomly chosen documents by default and the
fit keeps the best of ``n_init`` restarts (judged by the final bound).
"""

from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.special import digamma, gammaln
from sklearn.base import BaseEstimator

from .errors import EmptySlice, NonConvergenceWarning
from .validation import as_rng, check_count_matrix

__all__ = ["VariationalLda", "fit_lda", "PROB_FLOOR"]

logger = logging.getLogger(__name__)

# probabilities are floored here before any log to avoid -inf
PROB_FLOOR = 1e-12
_TINY = 1e-300
_BLOCK = 1024  # document rows processed per E-step block


class VariationalLda(BaseEstimator):
    """Latent topic mixture model fit by batch variational EM.

    Parameters
    ----------
    n_topics : int
        Number of topics, >= 1.
    doc_topic_prior : float
        Symmetric Dirichlet prior on per-document proportions.
    max_iter : int
        EM iteration cap per restart.
    tol : float
        Relative bound change that counts as converged.
    doc_max_iter, doc_tol : int, float
        Per-document update sweep cap and gamma change tolerance.
    n_init : int
        Restarts; the one with the best final bound wins.
    init : {"docs", "gamma"}
        Topic initialization: smoothed word counts of randomly chosen
        documents (default), or near-uniform gamma noise.
    seed : int
        Controls initialization; fits are deterministic given it.

    Attributes
    ----------
    topic_word_ : ndarray of shape (n_topics, n_words)
        Per-topic word distributions, rows sum to 1.
    doc_topic_ : ndarray of shape (n_docs, n_topics)
        Posterior-mean topic proportions per document.
    gamma_ : ndarray of shape (n_docs, n_topics)
        Variational Dirichlet parameters.
    bound_trace_ : list of float
        Variational bound per EM iteration of the winning restart
        (non-decreasing).
    restart_bounds_ : list of float
        Final bound of every restart.
    n_iter_ : int
    converged_ : bool
    """

    def __init__(
        self,
        n_topics=10,
        doc_topic_prior=0.1,
        max_iter=100,
        tol=1e-4,
        doc_max_iter=100,
        doc_tol=1e-4,
        n_init=3,
        init="docs",
        seed=0,
    ):
        self.n_topics = n_topics
        self.doc_topic_prior = doc_topic_prior
        self.max_iter = max_iter
        self.tol = tol
        self.doc_max_iter = doc_max_iter
        self.doc_tol = doc_tol
        self.n_init = n_init
        self.init = init
        self.seed = seed

    def fit(self, X, y=None):
        X = check_count_matrix(X)
        if X.shape[0] == 0:
            raise EmptySlice("cannot fit a topic model on zero documents")
        K = int(self.n_topics)
        if K < 1:
            raise ValueError("n_topics must be >= 1")
        if self.init not in ("docs", "gamma"):
            raise ValueError("init must be 'docs' or 'gamma'")

        children = np.random.SeedSequence(self.seed).spawn(int(self.n_init))
        best = None
        self.restart_bounds_ = []
        for child in children:
            state = self._run_em(X, K, as_rng(np.random.default_rng(child)))
            self.restart_bounds_.append(state["bound_trace"][-1])
            if best is None or state["bound_trace"][-1] > best["bound_trace"][-1]:
                best = state

        self.topic_word_ = best["topic_word"]
        self.gamma_ = best["gamma"]
        self.doc_topic_ = self.gamma_ / self.gamma_.sum(axis=1, keepdims=True)
        self.bound_trace_ = best["bound_trace"]
        self.n_iter_ = best["n_iter"]
        self.converged_ = best["converged"]
        if not self.converged_:
            warnings.warn(
                f"variational EM stopped at {self.n_iter_} iterations "
                "without reaching tolerance; returning best-so-far fit",
                NonConvergenceWarning,
            )
        return self

    def _init_topics(self, X, K, rng):
        n_docs, n_words = X.shape
        if self.init == "docs" and n_docs >= K:
            picks = rng.choice(n_docs, size=K, replace=False)
            topic_word = np.asarray(X[np.sort(picks)].todense(), dtype=float) + 1.0
        else:
            topic_word = rng.gamma(100.0, 0.01, (K, n_words))
        return topic_word / topic_word.sum(axis=1, keepdims=True)

    def _run_em(self, X, K, rng):
        n_docs = X.shape[0]
        alpha = float(self.doc_topic_prior)
        topic_word = self._init_topics(X, K, rng)
        doc_lengths = np.asarray(X.sum(axis=1)).ravel()
        gamma = np.tile(alpha + doc_lengths[:, None] / K, (1, K)).astype(float)

        bound_trace = []
        converged = False
        n_iter = int(self.max_iter)
        previous = None
        for iteration in range(int(self.max_iter)):
            gamma, ss, bound = self._e_step(X, topic_word, gamma, alpha)
            bound_trace.append(bound)

            row_sums = ss.sum(axis=1, keepdims=True)
            dead = row_sums.ravel() == 0
            if dead.any():
                ss[dead] = 1.0
                row_sums = ss.sum(axis=1, keepdims=True)
            topic_word = ss / row_sums

            if previous is not None:
                delta = abs(bound - previous) / (abs(previous) + 1e-12)
                if delta < self.tol:
                    converged = True
                    n_iter = iteration + 1
                    break
            previous = bound
        return {
            "topic_word": topic_word,
            "gamma": gamma,
            "bound_trace": bound_trace,
            "converged": converged,
            "n_iter": n_iter,
        }

    def _e_step(self, X, topic_word, gamma, alpha, with_stats=True):
        """Per-document sweeps over all documents, block-wise.

        Returns (gamma, ss, bound); the statistics and bound are computed
        from responsibilities consistent with the final gamma.
        """
        K, n_words = topic_word.shape
        B = np.maximum(topic_word, PROB_FLOOR)
        ss = np.zeros((K, n_words)) if with_stats else None
        bound = 0.0
        gamma = gamma.copy()
        for lo in range(0, X.shape[0], _BLOCK):
            hi = min(lo + _BLOCK, X.shape[0])
            Xb = X[lo:hi]
            g = gamma[lo:hi]
            for _ in range(int(self.doc_max_iter)):
                E = np.exp(digamma(g) - digamma(g.sum(axis=1))[:, None])
                S = np.maximum(E @ B, _TINY)
                R = Xb.multiply(1.0 / S)
                g_new = alpha + E * np.asarray(R @ B.T)
                change = np.abs(g_new - g).mean(axis=1).max()
                g = g_new
                if change < self.doc_tol:
                    break
            gamma[lo:hi] = g
            if not with_stats:
                continue
            elog = digamma(g) - digamma(g.sum(axis=1))[:, None]
            E = np.exp(elog)
            S = np.maximum(E @ B, _TINY)
            R = Xb.multiply(1.0 / S)
            ss += B * np.asarray(R.T @ E).T
            # token part: sum_k phi (x - log phi) collapses to log normalizers
            bound += float(Xb.multiply(np.log(S)).sum())
            bound += float(np.sum((alpha - g) * elog))
            bound += float(np.sum(gammaln(g)) - np.sum(gammaln(g.sum(axis=1))))
        if with_stats:
            bound += X.shape[0] * float(gammaln(K * alpha) - K * gammaln(alpha))
        return gamma, ss, bound

    def transform(self, X):
        """Infer topic proportions for new documents under the fitted topics."""
        X = check_count_matrix(X, n_features=self.topic_word_.shape[1])
        K = self.topic_word_.shape[0]
        alpha = float(self.doc_topic_prior)
        doc_lengths = np.asarray(X.sum(axis=1)).ravel()
        gamma = np.tile(alpha + doc_lengths[:, None] / K, (1, K)).astype(float)
        gamma, _, _ = self._e_step(X, self.topic_word_, gamma, alpha, with_stats=False)
        return gamma / gamma.sum(axis=1, keepdims=True)


def fit_lda(slice_counts, n_topics, alpha0=0.1, seed=0, **kwargs):
    """Fit one slice and return ``(topic_word, doc_topic)``.

    Thin functional wrapper over :class:`VariationalLda`; see it for the
    knobs accepted through ``kwargs``.
    """
    lda = VariationalLda(
        n_topics=n_topics, doc_topic_prior=alpha0, seed=seed, **kwargs
    ).fit(slice_counts)
    return lda.topic_word_, lda.doc_topic_
