"""Perplexity and coherence against closed-form and brute-force oracles."""

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import single_slice_corpus
from diatopic.corpus import CorpusSlice, TimeSlicedCorpus
from diatopic.errors import DimensionMismatch, VocabularyMismatch
from diatopic.generate import generate_dtm_corpus
from diatopic.metrics import log_perplexity, topic_coherence
from diatopic.model import FittedModel, Hyperparams, TopicChain


def model_from_probs(word_dists, alpha=None, doc_ids=(), labels=("2000",), vocab=None):
    """Hand-built single-slice model with given topic word distributions."""
    word_dists = np.asarray(word_dists, dtype=float)
    K, V = word_dists.shape
    vocab = vocab or [f"w{j:03d}" for j in range(V)]
    ids = list(doc_ids)
    return FittedModel(
        chains=[TopicChain(np.log(np.maximum(word_dists[k], 1e-300))[None, :]) for k in range(K)],
        alpha_path=np.zeros((1, K)) if alpha is None else np.asarray(alpha)[None, :],
        doc_theta=np.full((len(ids), K), 1.0 / K),
        doc_slice=np.zeros(len(ids), dtype=int),
        eta=np.zeros((len(ids), K)),
        train_log={},
        vocabulary=vocab,
        slice_labels=list(labels),
        doc_ids=ids,
        hyper=Hyperparams(n_topics=max(K, 2)) if K >= 2 else Hyperparams(n_topics=2),
    )


def test_single_doc_single_topic_is_cross_entropy():
    # K=1: predictive distribution is the topic itself; the value is the
    # cross-entropy of the document against it, hand-computable
    p = np.array([0.5, 0.25, 0.25])
    counts = np.array([[2.0, 1.0, 1.0]])
    corpus = single_slice_corpus(counts)
    model = FittedModel(
        chains=[TopicChain(np.log(p)[None, :])],
        alpha_path=np.zeros((1, 1)),
        doc_theta=np.ones((1, 1)),
        doc_slice=np.zeros(1, dtype=int),
        eta=np.zeros((1, 1)),
        train_log={},
        vocabulary=corpus.vocabulary,
        slice_labels=corpus.slice_labels,
        doc_ids=["d0000"],
        hyper=Hyperparams(n_topics=2),  # hyper K unused for hand-built chains
    )
    want = -(2 * np.log(0.5) + np.log(0.25) + np.log(0.25)) / 4
    got = log_perplexity(model, corpus)
    assert abs(got - want) < 1e-9


@pytest.mark.filterwarnings("ignore::diatopic.errors.NonConvergenceWarning")
def test_perplexity_deterministic_and_order_invariant():
    hyper = Hyperparams(n_topics=2, sigma2=0.01, seed=0)
    corpus, truth = generate_dtm_corpus(hyper, V=10, T=2, docs_per_slice=25, words_per_doc=15)
    from diatopic.dtm import fit_dtm

    model = fit_dtm(corpus, hyper, max_iter=10)
    ids = corpus.doc_ids()
    held = corpus.subset_by_ids(ids[40:])
    a = log_perplexity(model, held)
    b = log_perplexity(model, held)
    assert a == b
    # bag-of-words: a corpus with identical counts in permuted doc order
    reordered = TimeSlicedCorpus(
        held.vocabulary,
        [
            CorpusSlice(s.label, list(reversed(s.doc_ids)), sp.csr_matrix(s.counts.toarray()[::-1]))
            for s in held.slices
        ],
        held.slice_rule,
    )
    assert abs(log_perplexity(model, reordered) - a) < 1e-12


def test_perplexity_vocab_mismatch():
    counts = np.eye(3)
    corpus = single_slice_corpus(counts)
    model = model_from_probs(
        np.array([[0.5, 0.5], [0.4, 0.6]]), doc_ids=["x"], vocab=["a", "b"],
    )
    with pytest.raises(VocabularyMismatch):
        log_perplexity(model, corpus)


# -- coherence ----------------------------------------------------------------


def brute_force_coherence(top_words, X):
    """Independent pairwise document-frequency counter."""
    docs = [set(np.nonzero(row)[0]) for row in np.asarray(X)]
    scores = []
    for words in top_words:
        score = 0.0
        for wi in words:
            for wj in words:
                if wi == wj:
                    continue
                dj = sum(1 for d in docs if wj in d)
                if dj == 0:
                    continue
                dij = sum(1 for d in docs if wi in d and wj in d)
                score += np.log((dij + 1.0) / dj)
        scores.append(score)
    return np.array(scores)


def test_coherence_always_cooccurring_pair():
    # two words in every document: each ordered pair contributes log((D+1)/D)
    X = np.tile(np.array([[3.0, 1.0, 0.0, 0.0]]), (5, 1))
    corpus = single_slice_corpus(X)
    model = model_from_probs(
        np.array([[0.6, 0.4, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]]),
        doc_ids=corpus.doc_ids(),
    )
    result = topic_coherence(model, corpus, top_n=2)
    want_pair = np.log(6 / 5)
    assert abs(result.per_topic[0] - 2 * want_pair) < 1e-12


def test_coherence_never_cooccurring_words():
    # words split across disjoint document halves: D(wi, wj) = 0
    X = np.zeros((6, 4))
    X[:3, 0] = 1
    X[3:, 1] = 1
    X[:, 2] = 1  # filler so docs share vocab size
    corpus = single_slice_corpus(X)
    model = model_from_probs(
        np.array([[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]]),
        doc_ids=corpus.doc_ids(),
    )
    result = topic_coherence(model, corpus, top_n=2)
    want = np.log(1 / 3) + np.log(1 / 3)  # both directions, D(wj) = 3
    assert abs(result.per_topic[0] - want) < 1e-12


def test_coherence_matches_brute_force_on_random_model():
    rng = np.random.default_rng(8)
    X = (rng.random((50, 30)) < 0.2) * rng.integers(1, 4, size=(50, 30))
    corpus = single_slice_corpus(X.astype(float))
    word_dists = rng.dirichlet(np.ones(30), size=5)
    model = model_from_probs(word_dists, doc_ids=corpus.doc_ids())
    result = topic_coherence(model, corpus, top_n=10)
    top = [
        np.argsort(-model.chains[k].time_averaged_probabilities(), kind="stable")[:10]
        for k in range(5)
    ]
    want = brute_force_coherence(top, X)
    assert np.abs(result.per_topic - want).max() < 1e-9
    assert abs(result.average - want.mean()) < 1e-9


def test_coherence_validates_top_n():
    X = np.eye(3)
    corpus = single_slice_corpus(X)
    model = model_from_probs(np.full((2, 3), 1 / 3), doc_ids=corpus.doc_ids())
    with pytest.raises(DimensionMismatch):
        topic_coherence(model, corpus, top_n=1)
