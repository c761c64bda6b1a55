"""Dynamic topic model: variational EM over Gaussian-chained topics.

Model per time slice: every topic's word natural parameters take a
Gaussian step of variance ``sigma2`` from the previous slice; the corpus
proportion mean path takes steps of variance ``delta2``; every document
draws its own natural proportion vector around its slice mean with
variance ``a2``; topics and proportions map to probabilities through the
softmax.

Inference alternates three blocks until the overall objective stabilizes:

* per-document mean-field updates - multinomial responsibilities for the
  words and a Newton-optimized point estimate of the document's natural
  proportion vector, batched over all documents of a slice;
* per-topic chain updates - each chain's posterior is a Gaussian chain
  driven by virtual word observations; posterior means come from a
  forward filter / backward (RTS) smoother pass, and the virtual
  observations are optimized against the expected word counts with the
  softmax normalizer handled through a per-slice auxiliary bound;
* the proportion mean path - an exact scalar Kalman smoother per
  coordinate, observing each slice's mean document vector.

This is the classic state-space treatment of the model; chain variances
do not depend on the word identity, so the smoother's mean map is a fixed
(T+1, T) linear operator applied to the whole observation matrix at once.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy import optimize
from sklearn.base import BaseEstimator

from .corpus import TimeSlicedCorpus
from .errors import (
    DimensionMismatch,
    EmptySlice,
    NonConvergenceWarning,
    VocabularyMismatch,
)
from .lda import VariationalLda
from .model import FittedModel, Hyperparams, TopicChain
from .transforms import log_softmax, softmax
from .validation import as_rng

__all__ = ["GaussianChainSmoother", "DynamicTopicModel", "fit_dtm", "infer_theta"]

logger = logging.getLogger(__name__)

# variance of the diffuse pre-first state, in units of the chain variance
INIT_VARIANCE_SCALE = 1000.0
# cap on exponents inside the auxiliary bound; never active near an optimum
EXP_CAP = 50.0
_TINY = 1e-300


class GaussianChainSmoother:
    """Forward-backward smoother for a random-walk chain with virtual observations.

    The chain has step variance ``chain_variance`` and is observed at every
    slice with variance ``obs_variance``; the pre-first state is diffuse.
    Posterior variances are observation-independent, and the posterior mean
    is the fixed linear map ``mean_map`` (shape (T+1, T)) applied to the
    observation vector, so a whole (V, T) observation matrix smooths in one
    matrix product.
    """

    def __init__(self, n_slices, chain_variance, obs_variance):
        if chain_variance <= 0 or obs_variance <= 0:
            raise ValueError("chain_variance and obs_variance must be > 0")
        T = int(n_slices)
        s2, v2 = float(chain_variance), float(obs_variance)
        self.n_slices = T
        self.chain_variance = s2
        self.obs_variance = v2

        fwd_var = np.empty(T + 1)
        fwd_var[0] = INIT_VARIANCE_SCALE * s2
        for t in range(1, T + 1):
            c = v2 / (fwd_var[t - 1] + s2 + v2)
            fwd_var[t] = c * (fwd_var[t - 1] + s2)
        var = np.empty(T + 1)
        var[T] = fwd_var[T]
        for t in range(T - 1, -1, -1):
            c = (fwd_var[t] / (fwd_var[t] + s2)) ** 2
            var[t] = c * (var[t + 1] - s2) + (1.0 - c) * fwd_var[t]
        self.fwd_variance = fwd_var
        self.variance = var

        mean_map = np.zeros((T + 1, T))
        for s in range(T):
            d = np.zeros(T + 1)
            for t in range(1, T + 1):
                c = v2 / (fwd_var[t - 1] + s2 + v2)
                d[t] = c * d[t - 1] + (0.0 if s != t - 1 else 1.0 - c)
            for t in range(T - 1, -1, -1):
                c = s2 / (fwd_var[t] + s2)
                d[t] = c * d[t] + (1.0 - c) * d[t + 1]
            mean_map[:, s] = d
        self.mean_map = mean_map

    def smooth(self, obs):
        """Posterior means for observations ``obs`` of shape (V, T) -> (V, T+1)."""
        return obs @ self.mean_map.T


def _safe_exp(x):
    """exp with a linear C1 continuation above EXP_CAP; returns (value, slope).

    Keeps the chain objective and its gradient mutually consistent even if
    a line search wanders into territory where a plain exp would overflow.
    """
    capped = x > EXP_CAP
    slope = np.exp(np.minimum(x, EXP_CAP))
    value = np.where(capped, slope * (1.0 + x - EXP_CAP), slope)
    return value, slope


def _chain_objective(x, ss, totals_over_zeta, smoother, shape):
    """Negative penalized likelihood of one topic chain and its gradient."""
    V, T = shape
    s2 = smoother.chain_variance
    A = smoother.mean_map
    obs = x.reshape(V, T)
    means = obs @ A.T
    expo, expo_slope = _safe_exp(means[:, 1:] + smoother.variance[1:] / 2.0)
    value = float(np.sum(ss * means[:, 1:]) - np.sum(totals_over_zeta * expo))
    diffs = np.diff(means, axis=1)
    value -= float(np.sum(diffs**2)) / (2.0 * s2)
    value -= float(np.sum(means[:, 0] ** 2)) / (2.0 * INIT_VARIANCE_SCALE * s2)

    grad_m = np.zeros_like(means)
    grad_m[:, 1:] = ss - totals_over_zeta * expo_slope
    grad_m[:, 1:] -= diffs / s2
    grad_m[:, :-1] += diffs / s2
    grad_m[:, 0] -= means[:, 0] / (INIT_VARIANCE_SCALE * s2)
    return -value, -(grad_m @ A).ravel()


def _chain_zeta(means, smoother):
    value, _ = _safe_exp(means[:, 1:] + smoother.variance[1:] / 2.0)
    return np.maximum(value.sum(axis=0), _TINY)


def _fit_chain(ss, smoother, obs, inner_iter, opt_maxiter):
    """M-step for one topic chain.

    ``ss`` holds expected word counts per (word, slice). Alternates the
    auxiliary normalizer update with an L-BFGS pass over the virtual
    observations (the objective is separable across words once the
    normalizer is fixed).

    Returns (obs, means, zeta, chain_bound).
    """
    V, T = ss.shape
    totals = ss.sum(axis=0)
    means = smoother.smooth(obs)
    s2 = smoother.chain_variance
    for _ in range(int(inner_iter)):
        zeta = _chain_zeta(means, smoother)
        result = optimize.minimize(
            _chain_objective,
            obs.ravel(),
            args=(ss, totals / zeta, smoother, (V, T)),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": int(opt_maxiter)},
        )
        obs = result.x.reshape(V, T)
        means = smoother.smooth(obs)
    zeta = _chain_zeta(means, smoother)
    bound = float(np.sum(ss * means[:, 1:]) - totals @ np.log(zeta))
    bound -= float(np.sum(np.diff(means, axis=1) ** 2)) / (2.0 * s2)
    bound -= float(np.sum(means[:, 0] ** 2)) / (2.0 * INIT_VARIANCE_SCALE * s2)
    return obs, means, zeta, bound


def _eta_objective(eta, alpha_t, a2, C, N):
    """Per-row objective -||eta - alpha||^2/(2 a2) + C.eta - N lse(eta)."""
    diff = eta - alpha_t[None, :]
    rmax = eta.max(axis=1)
    lse = rmax + np.log(np.exp(eta - rmax[:, None]).sum(axis=1))
    return (
        -0.5 * (diff * diff).sum(axis=1) / a2 + (C * eta).sum(axis=1) - N * lse
    )


def _newton_eta_batch(eta, alpha_t, a2, C, N, max_iter=40, grad_tol=1e-9):
    """Maximize the concave per-document objective, batched over documents.

    Newton steps use the Sherman-Morrison closed form for each
    diagonal-plus-rank-one Hessian, with per-row halving to guarantee
    ascent. ``eta`` has shape (n_docs, n_topics).
    """
    eta = eta.copy()
    value = _eta_objective(eta, alpha_t, a2, C, N)
    for _ in range(int(max_iter)):
        P = softmax(eta, axis=1)
        grad = -(eta - alpha_t[None, :]) / a2 + C - N[:, None] * P
        if np.abs(grad).max() < grad_tol:
            break
        D = 1.0 / a2 + N[:, None] * P
        Dg = grad / D
        Dp = P / D
        denom = 1.0 - N * (P * Dp).sum(axis=1)  # provably > 0
        coef = N * (P * Dg).sum(axis=1) / denom
        delta = Dg + Dp * coef[:, None]

        step = np.ones(len(eta))
        cand = eta + delta
        cand_value = _eta_objective(cand, alpha_t, a2, C, N)
        for _ in range(30):
            bad = cand_value < value - 1e-12
            if not bad.any():
                break
            step[bad] *= 0.5
            cand[bad] = eta[bad] + step[bad, None] * delta[bad]
            cand_value[bad] = _eta_objective(cand[bad], alpha_t, a2, C[bad], N[bad])
        good = cand_value >= value - 1e-12
        if not good.any():
            break
        eta[good] = cand[good]
        value[good] = cand_value[good]
    return eta


def _fit_slice_documents(Xs, elog_beta_t, alpha_t, a2, eta, max_iter, tol):
    """Mean-field updates for all documents of one slice.

    ``Xs`` is the (n_docs, V) count matrix, ``elog_beta_t`` the (K, V)
    expected log word probabilities of the slice. Word responsibilities
    are never materialized per word; the expected counts come out of
    rescaled matrix products. Returns ``(eta, ss, bound)`` with ``ss`` of
    shape (K, V) and the responsibilities recomputed from the final eta so
    the statistics and the bound describe the same state.
    """
    col_shift = elog_beta_t.max(axis=0)  # (V,)
    B = np.exp(elog_beta_t - col_shift[None, :])  # (K, V), column max 1
    N = np.asarray(Xs.sum(axis=1)).ravel()

    def responsibility_pieces(eta_now):
        row_shift = eta_now.max(axis=1)
        E = np.exp(eta_now - row_shift[:, None])  # (D, K), row max 1
        S = np.maximum(E @ B, _TINY)  # (D, V) normalizers
        R = Xs.multiply(1.0 / S)  # sparse counts / normalizer
        return row_shift, E, S, R

    for _ in range(int(max_iter)):
        _, E, _, R = responsibility_pieces(eta)
        C = E * np.asarray(R @ B.T)  # (D, K) expected topic counts
        eta_new = _newton_eta_batch(eta, alpha_t, a2, C, N)
        change = np.abs(eta_new - eta).max() if eta.size else 0.0
        eta = eta_new
        if change < tol:
            break

    row_shift, E, S, R = responsibility_pieces(eta)
    ss = B * np.asarray(R.T @ E).T  # (K, V) expected word counts
    log_s = np.log(S)
    token_bound = float(Xs.multiply(log_s).sum())
    token_bound += float(N @ row_shift) + float((Xs @ col_shift).sum())
    lse_eta = row_shift + np.log(E.sum(axis=1))
    diff = eta - alpha_t[None, :]
    bound = (
        -0.5 * float((diff * diff).sum()) / a2
        + token_bound
        - float(N @ lse_eta)
    )
    return eta, ss, bound


def _smooth_alpha_path(eta, doc_slice, n_slices, delta2, a2, prior_mean):
    """Exact Kalman/RTS smoother for the proportion mean path.

    Each slice contributes its mean document vector as a Gaussian
    observation with variance ``a2 / n_docs``; the path prior is a random
    walk with step variance ``delta2`` and a diffuse start around
    ``prior_mean``.
    """
    K = eta.shape[1]
    y = np.empty((n_slices, K))
    r = np.empty(n_slices)
    for t in range(n_slices):
        rows = doc_slice == t
        n_t = int(rows.sum())
        y[t] = eta[rows].mean(axis=0)
        r[t] = a2 / n_t
    m = np.empty((n_slices, K))
    P = np.empty(n_slices)
    prior_var = 1000.0
    pred_mean, pred_var = prior_mean.astype(float), prior_var
    for t in range(n_slices):
        if t > 0:
            pred_mean, pred_var = m[t - 1], P[t - 1] + delta2
        gain = pred_var / (pred_var + r[t])
        m[t] = pred_mean + gain * (y[t] - pred_mean)
        P[t] = (1.0 - gain) * pred_var
    for t in range(n_slices - 2, -1, -1):
        denom = P[t] + delta2
        gain = P[t] / denom if denom > 0 else 0.0
        m[t] = m[t] + gain * (m[t + 1] - m[t])
    return m


class DynamicTopicModel(BaseEstimator):
    """Estimator interface for the Gaussian-chain dynamic topic model.

    Parameters
    ----------
    n_topics : int
    sigma2, delta2, a2 : float
        Chain step variance (topics), chain step variance (proportion
        path), and per-document proportion variance.
    alpha0 : float or array of shape (n_topics,)
        Initial proportion mean (natural parameters; 0 means uniform).
    seed : int
        Drives the pooled initialization; fits are deterministic given it.
    obs_variance : float
        Virtual observation variance of the chain smoother.
    max_iter, tol : int, float
        Outer EM cap and relative objective change that counts as
        converged.
    doc_max_iter, doc_tol : int, float
        Per-slice mean-field iteration cap and eta change tolerance.
    chain_inner_iter, chain_opt_maxiter : int, int
        Normalizer/observation alternations per chain M-step, and L-BFGS
        iteration cap per alternation.
    init_lda_iter : int
        EM iterations of the pooled initialization fit.
    init_noise : float
        Scale of the symmetric noise added to the initial chains.

    Attributes
    ----------
    model_ : FittedModel
    bound_trace_ : list of float
    n_iter_ : int
    converged_ : bool
    """

    def __init__(
        self,
        n_topics=10,
        sigma2=0.005,
        delta2=0.01,
        a2=1.0,
        alpha0=0.0,
        seed=0,
        obs_variance=0.5,
        max_iter=100,
        tol=1e-4,
        doc_max_iter=25,
        doc_tol=1e-6,
        chain_inner_iter=2,
        chain_opt_maxiter=50,
        init_lda_iter=30,
        init_noise=1e-3,
    ):
        self.n_topics = n_topics
        self.sigma2 = sigma2
        self.delta2 = delta2
        self.a2 = a2
        self.alpha0 = alpha0
        self.seed = seed
        self.obs_variance = obs_variance
        self.max_iter = max_iter
        self.tol = tol
        self.doc_max_iter = doc_max_iter
        self.doc_tol = doc_tol
        self.chain_inner_iter = chain_inner_iter
        self.chain_opt_maxiter = chain_opt_maxiter
        self.init_lda_iter = init_lda_iter
        self.init_noise = init_noise

    def hyperparams(self):
        return Hyperparams(
            n_topics=int(self.n_topics),
            sigma2=float(self.sigma2),
            delta2=float(self.delta2),
            a2=float(self.a2),
            alpha0=self.alpha0,
            seed=int(self.seed),
        )

    def fit(self, corpus, y=None):
        if not isinstance(corpus, TimeSlicedCorpus):
            raise DimensionMismatch("fit expects a TimeSlicedCorpus")
        if corpus.n_slices < 1 or corpus.vocab_size < 1:
            raise EmptySlice("corpus needs at least one slice and one token")
        for s in corpus.slices:
            if s.n_docs == 0:
                raise EmptySlice(f"slice {s.label!r} holds no documents")
        if self.sigma2 <= 0:
            raise ValueError("fitting requires sigma2 > 0")
        if self.delta2 < 0 or self.a2 <= 0:
            raise ValueError("delta2 must be >= 0 and a2 > 0")
        hyper = self.hyperparams()
        K, T, V = hyper.n_topics, corpus.n_slices, corpus.vocab_size
        a2, delta2 = float(self.a2), float(self.delta2)
        rng = as_rng(self.seed)

        slice_counts = [s.counts.tocsr() for s in corpus.slices]
        doc_slice = corpus.doc_slice_indices()
        slice_rows = np.concatenate([[0], np.cumsum([s.n_docs for s in corpus.slices])])

        logger.info("initializing %d chains from a pooled fit", K)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergenceWarning)
            pooled = VariationalLda(
                n_topics=K,
                doc_topic_prior=1.0 / K,
                max_iter=int(self.init_lda_iter),
                seed=self.seed,
            ).fit(corpus.stacked_counts())
        p0 = pooled.topic_word_ + 1.0 / V
        p0 /= p0.sum(axis=1, keepdims=True)
        obs = np.repeat(np.log(p0)[:, :, None], T, axis=2)  # (K, V, T)
        obs += float(self.init_noise) * rng.standard_normal(obs.shape)

        smoother = GaussianChainSmoother(
            T, float(self.sigma2), float(self.obs_variance)
        )
        means = np.stack([smoother.smooth(obs[k]) for k in range(K)])
        zeta = np.stack([_chain_zeta(means[k], smoother) for k in range(K)])
        elog_beta = self._expected_log_beta(means, zeta)

        alpha0_vec = hyper.alpha0_vector()
        alpha_path = np.tile(alpha0_vec, (T, 1))
        eta = alpha_path[doc_slice].copy()

        self.bound_trace_ = []
        self.converged_ = False
        previous = None
        for iteration in range(int(self.max_iter)):
            ss = np.zeros((K, V, T))
            doc_bound = 0.0
            for t in range(T):
                lo, hi = slice_rows[t], slice_rows[t + 1]
                eta[lo:hi], ss_t, b = _fit_slice_documents(
                    slice_counts[t],
                    elog_beta[:, t, :],
                    alpha_path[t],
                    a2,
                    eta[lo:hi],
                    self.doc_max_iter,
                    self.doc_tol,
                )
                ss[:, :, t] = ss_t
                doc_bound += b

            chain_bound = 0.0
            for k in range(K):
                obs[k], means[k], zeta[k], cb = _fit_chain(
                    ss[k],
                    smoother,
                    obs[k],
                    self.chain_inner_iter,
                    self.chain_opt_maxiter,
                )
                chain_bound += cb
            elog_beta = self._expected_log_beta(means, zeta)

            alpha_path = _smooth_alpha_path(
                eta, doc_slice, T, delta2, a2, alpha0_vec
            )
            if T > 1 and delta2 > 0:
                steps = np.diff(alpha_path, axis=0)
                alpha_bound = -float(np.sum(steps**2)) / (2.0 * delta2)
            else:
                alpha_bound = 0.0

            bound = doc_bound + chain_bound + alpha_bound
            self.bound_trace_.append(bound)
            logger.info("iteration %d objective %.6f", iteration + 1, bound)
            if previous is not None:
                delta = abs(bound - previous) / (abs(previous) + 1e-12)
                if delta < self.tol:
                    self.converged_ = True
                    self.n_iter_ = iteration + 1
                    break
            previous = bound
        else:
            self.n_iter_ = int(self.max_iter)

        if not self.converged_:
            warnings.warn(
                f"dynamic topic fit stopped at {self.n_iter_} iterations "
                "without reaching tolerance; returning best-so-far state",
                NonConvergenceWarning,
            )

        deltas = [
            abs(b - a) / (abs(a) + 1e-12)
            for a, b in zip(self.bound_trace_, self.bound_trace_[1:])
        ]
        self.model_ = FittedModel(
            chains=[TopicChain(means[k][:, 1:].T) for k in range(K)],
            alpha_path=alpha_path,
            doc_theta=softmax(eta, axis=1),
            doc_slice=doc_slice,
            eta=eta,
            train_log={
                "iterations": self.n_iter_,
                "converged": self.converged_,
                "bound_trace": [float(b) for b in self.bound_trace_],
                "convergence_deltas": [float(d) for d in deltas],
                "final_bound": float(self.bound_trace_[-1]),
            },
            vocabulary=list(corpus.vocabulary),
            slice_labels=corpus.slice_labels,
            doc_ids=corpus.doc_ids(),
            hyper=hyper,
            corpus_hash=corpus.content_hash(),
        )
        return self

    @staticmethod
    def _expected_log_beta(means, zeta):
        """(K, T, V) expected log word probabilities from chain means."""
        eb = means[:, :, 1:].transpose(0, 2, 1)  # (K, T, V)
        return eb - np.log(zeta)[:, :, None]

    def transform(self, corpus):
        """Infer topic proportions for (possibly new) documents."""
        return infer_theta(self.model_, corpus)


def infer_theta(model, corpus, doc_max_iter=25, doc_tol=1e-6):
    """Fold new documents into a fitted model; returns theta of shape (M, K).

    The corpus vocabulary must be a subset of the model vocabulary and
    every slice label must be one the model was trained on.
    """
    eta, _ = infer_eta(model, corpus, doc_max_iter=doc_max_iter, doc_tol=doc_tol)
    return softmax(eta, axis=1) if len(eta) else eta


def infer_eta(model, corpus, doc_max_iter=25, doc_tol=1e-6):
    """Fold-in inference; returns (eta, doc_slice_indices)."""
    col_map = vocabulary_map(model, corpus)
    label_index = {lab: t for t, lab in enumerate(model.slice_labels)}
    try:
        slice_map = [label_index[s.label] for s in corpus.slices]
    except KeyError as exc:
        raise DimensionMismatch(
            f"slice label {exc.args[0]!r} unknown to the model"
        ) from None

    elog_beta = np.stack(
        [log_softmax(c.natural_params, axis=1) for c in model.chains]
    )  # (K, T, V)
    a2 = model.hyper.a2
    K = model.n_topics
    etas = []
    slices_out = []
    for s, t in zip(corpus.slices, slice_map):
        Xs = s.counts.tocsr()
        if col_map is not None:
            Xs = _remap_columns(Xs, col_map, len(model.vocabulary))
        eta0 = np.tile(model.alpha_path[t], (Xs.shape[0], 1))
        eta_s, _, _ = _fit_slice_documents(
            Xs,
            elog_beta[:, t, :],
            model.alpha_path[t],
            a2,
            eta0,
            doc_max_iter,
            doc_tol,
        )
        etas.append(eta_s)
        slices_out.extend([t] * Xs.shape[0])
    if not etas:
        return np.zeros((0, K)), np.zeros(0, dtype=int)
    return np.concatenate(etas, axis=0), np.asarray(slices_out, dtype=int)


def vocabulary_map(model, corpus):
    """Column remap from corpus vocabulary to model vocabulary (None if equal).

    Raises ``VocabularyMismatch`` when the corpus contains tokens the model
    never saw.
    """
    if corpus.vocabulary == model.vocabulary:
        return None
    index = {t: i for i, t in enumerate(model.vocabulary)}
    missing = [t for t in corpus.vocabulary if t not in index]
    if missing:
        raise VocabularyMismatch(
            f"{len(missing)} held-out tokens missing from the model "
            f"vocabulary (first: {missing[0]!r})"
        )
    return np.asarray([index[t] for t in corpus.vocabulary], dtype=int)


def _remap_columns(X, col_map, n_cols):
    import scipy.sparse as sp

    coo = X.tocoo()
    return sp.csr_matrix(
        (coo.data, (coo.row, col_map[coo.col])), shape=(X.shape[0], n_cols)
    )


def fit_dtm(corpus, hyper, **options):
    """Fit the dynamic topic model and return the :class:`FittedModel`.

    ``hyper`` is a :class:`Hyperparams`; extra fitting knobs go through
    ``options`` (see :class:`DynamicTopicModel`).
    """
    est = DynamicTopicModel(
        n_topics=hyper.n_topics,
        sigma2=hyper.sigma2,
        delta2=hyper.delta2,
        a2=hyper.a2,
        alpha0=hyper.alpha0,
        seed=hyper.seed,
        **options,
    )
    est.fit(corpus)
    return est.model_
