"""Model-quality metrics: held-out predictive likelihood and coherence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dtm import infer_eta, vocabulary_map
from .errors import DimensionMismatch, VocabularyMismatch
from .lda import PROB_FLOOR
from .transforms import softmax

__all__ = ["log_perplexity", "topic_coherence", "CoherenceResult"]


def log_perplexity(model, heldout, doc_max_iter=25, doc_tol=1e-6):
    """Per-word negative average predictive log-likelihood; lower is better.

    Each held-out document's topic proportions are inferred by folding it
    into the fitted model; its words are then scored against the mixture
    of its slice's topic distributions. Word order is irrelevant
    (bag-of-words) and repeat calls return the identical value.

    Raises
    ------
    VocabularyMismatch
        If the held-out vocabulary is not a subset of the model's.
    DimensionMismatch
        If a held-out slice label is unknown to the model.
    """
    eta, doc_slice = infer_eta(
        model, heldout, doc_max_iter=doc_max_iter, doc_tol=doc_tol
    )
    theta = softmax(eta, axis=1) if len(eta) else eta
    col_map = vocabulary_map(model, heldout)

    word_dists = np.stack(
        [c.probabilities() for c in model.chains]
    )  # (K, T, V_model)

    total_ll = 0.0
    total_tokens = 0.0
    d = 0
    for s in heldout.slices:
        Xs = s.counts.tocsr()
        for i in range(Xs.shape[0]):
            start, end = Xs.indptr[i], Xs.indptr[i + 1]
            words = Xs.indices[start:end]
            cnts = Xs.data[start:end]
            if col_map is not None:
                words = col_map[words]
            t = int(doc_slice[d])
            mix = theta[d] @ word_dists[:, t, :]
            total_ll += float(cnts @ np.log(np.maximum(mix[words], PROB_FLOOR)))
            total_tokens += float(cnts.sum())
            d += 1
    if total_tokens == 0:
        raise DimensionMismatch("held-out corpus holds no tokens")
    return -total_ll / total_tokens


@dataclass
class CoherenceResult:
    """Per-topic coherence scores plus their average."""

    per_topic: np.ndarray
    average: float
    variant: str = "umass-document-cooccurrence"
    top_words: list = None


def topic_coherence(model, corpus, top_n=10):
    """Document co-occurrence coherence of each topic's top words.

    For each topic, the ``top_n`` words ranked by time-averaged
    probability are scored by summing ``log((D(wi, wj) + 1) / D(wj))``
    over all ordered pairs ``i != j``, where ``D`` counts documents in the
    full corpus containing the word(s). Pairs whose conditioning word
    never occurs contribute nothing. Intrinsic: needs no external
    reference corpus.
    """
    if top_n < 2:
        raise DimensionMismatch("top_n must be >= 2")
    if corpus.vocabulary != model.vocabulary:
        raise VocabularyMismatch(
            "coherence expects the corpus the model was trained on"
        )

    X = corpus.stacked_counts()
    incidence = sp.csr_matrix(
        (np.ones_like(X.data), X.indices, X.indptr), shape=X.shape
    )

    top = []
    for chain in model.chains:
        avg = chain.time_averaged_probabilities()
        order = np.argsort(-avg, kind="stable")
        top.append(order[:top_n].tolist())

    used = sorted({w for words in top for w in words})
    pos = {w: i for i, w in enumerate(used)}
    sub = incidence[:, used]
    codoc = np.asarray((sub.T @ sub).todense())  # D(wi, wj) on the diagonal: D(wi)
    doc_freq = np.diag(codoc)

    per_topic = np.empty(model.n_topics)
    for k, words in enumerate(top):
        score = 0.0
        for wi in words:
            for wj in words:
                if wi == wj:
                    continue
                dj = doc_freq[pos[wj]]
                if dj == 0:
                    continue
                dij = codoc[pos[wi], pos[wj]]
                score += np.log((dij + 1.0) / dj)
        per_topic[k] = score
    top_tokens = [[model.vocabulary[w] for w in words] for words in top]
    return CoherenceResult(
        per_topic=per_topic,
        average=float(per_topic.mean()),
        top_words=top_tokens,
    )
