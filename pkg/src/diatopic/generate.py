"""Forward samplers for the generative models, used for synthetic corpora.

The corpus generator returns both the sampled counts and the ground-truth
parameters so inference can be checked by recovery instead of by eyeball.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .corpus import CorpusSlice, TimeSlicedCorpus
from .errors import DimensionMismatch
from .model import FittedModel, Hyperparams, TopicChain
from .transforms import softmax
from .validation import as_rng

__all__ = ["generate_lda_document", "generate_dtm_corpus"]


def _categorical(rng, p, size):
    """Inverse-CDF categorical sampling; much faster than rng.choice."""
    cdf = np.cumsum(p)
    cdf[-1] = 1.0  # guard against rounding shortfall
    return np.searchsorted(cdf, rng.random(size), side="right")


def generate_lda_document(theta, betas, n_words, rng):
    """Sample one bag-of-words document from a static topic mixture.

    Every word is drawn by first picking a topic from ``theta`` and then a
    word from that topic's distribution.

    Parameters
    ----------
    theta : array-like, shape (n_topics,)
        Topic proportions; must sum to 1.
    betas : array-like, shape (n_topics, vocab_size)
        One word distribution per topic.
    n_words : int
    rng : numpy.random.Generator or int

    Returns
    -------
    list of int
        Word indices in draw order.
    """
    rng = as_rng(rng)
    theta = np.asarray(theta, dtype=float)
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    if theta.ndim != 1 or betas.shape[0] != theta.shape[0]:
        raise DimensionMismatch(
            f"theta has {theta.shape[0] if theta.ndim == 1 else '?'} topics, "
            f"betas has {betas.shape[0]}"
        )
    if n_words < 0:
        raise DimensionMismatch("n_words must be >= 0")
    n_words = int(n_words)
    words = np.empty(n_words, dtype=int)
    z = _categorical(rng, theta, n_words)
    for k in range(theta.shape[0]):
        mask = z == k
        n_k = int(mask.sum())
        if n_k:
            words[mask] = _categorical(rng, betas[k], n_k)
    return words.tolist()


def generate_dtm_corpus(
    hyper,
    V,
    T,
    docs_per_slice,
    words_per_doc,
    rng=None,
    beta_init_scale=1.0,
):
    """Sample a time-sliced corpus from the Gaussian-chain topic model.

    Topic chains take Gaussian steps of variance ``hyper.sigma2`` between
    slices, the proportion mean path takes steps of variance
    ``hyper.delta2``, each document draws its own natural proportion vector
    around the slice mean with variance ``hyper.a2``, and words follow the
    softmax of the natural parameters.

    Parameters
    ----------
    hyper : Hyperparams
    V, T, docs_per_slice, words_per_doc : int
        All must be >= 1.
    rng : numpy.random.Generator or int, optional
        Defaults to ``hyper.seed``.
    beta_init_scale : float
        Standard deviation of the initial topic natural parameters.

    Returns
    -------
    (TimeSlicedCorpus, FittedModel)
        The sampled counts and the ground truth that produced them.
    """
    if min(V, T, docs_per_slice, words_per_doc) < 1:
        raise DimensionMismatch("V, T, docs_per_slice, words_per_doc must be >= 1")
    rng = as_rng(hyper.seed if rng is None else rng)
    K = hyper.n_topics

    betas = np.empty((K, T, V))
    betas[:, 0] = rng.normal(0.0, beta_init_scale, (K, V))
    step_beta = np.sqrt(hyper.sigma2)
    for t in range(1, T):
        betas[:, t] = betas[:, t - 1] + step_beta * rng.normal(size=(K, V))

    alpha_path = np.empty((T, K))
    alpha_path[0] = hyper.alpha0_vector()
    step_alpha = np.sqrt(hyper.delta2)
    for t in range(1, T):
        alpha_path[t] = alpha_path[t - 1] + step_alpha * rng.normal(size=K)

    vocabulary = [f"w{j:04d}" for j in range(V)]
    a = np.sqrt(hyper.a2)
    slices = []
    etas = np.empty((T * docs_per_slice, K))
    doc_row = 0
    for t in range(T):
        word_dists = softmax(betas[:, t], axis=1)
        doc_ids = [f"d{t:03d}_{i:04d}" for i in range(docs_per_slice)]
        mat = sp.lil_matrix((docs_per_slice, V))
        for i in range(docs_per_slice):
            eta = alpha_path[t] + a * rng.normal(size=K)
            etas[doc_row] = eta
            theta = softmax(eta)
            z = _categorical(rng, theta, words_per_doc)
            for k in range(K):
                n_k = int((z == k).sum())
                if n_k:
                    drawn = _categorical(rng, word_dists[k], n_k)
                    for j, c in zip(*np.unique(drawn, return_counts=True)):
                        mat[i, j] += c
            doc_row += 1
        slices.append(
            CorpusSlice(label=f"t{t:03d}", doc_ids=doc_ids, counts=mat.tocsr())
        )

    corpus = TimeSlicedCorpus(
        vocabulary=vocabulary,
        slices=slices,
        slice_rule={"kind": "synthetic", "generator": "gaussian-chain"},
    )
    truth = FittedModel(
        chains=[TopicChain(betas[k]) for k in range(K)],
        alpha_path=alpha_path,
        doc_theta=softmax(etas, axis=1),
        doc_slice=np.repeat(np.arange(T), docs_per_slice),
        eta=etas,
        train_log={"source": "generator"},
        vocabulary=vocabulary,
        slice_labels=[s.label for s in slices],
        doc_ids=corpus.doc_ids(),
        hyper=hyper,
    )
    return corpus, truth
