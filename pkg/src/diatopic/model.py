"""Model containers: hyperparameters, topic chains, fitted models.

A fitted model stores natural parameters: per-slice topic-word vectors
(one Gaussian chain per topic), the topic-proportion mean path, and one
real vector per document whose softmax is the document's topic mixture.
The model archive is a directory of ``.npy`` matrices plus a JSON
manifest; serialization is byte-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DimensionMismatch
from .manifest import read_json, write_json
from .transforms import softmax

__all__ = ["Hyperparams", "TopicChain", "FittedModel"]

MODEL_FORMAT_VERSION = 1


@dataclass
class Hyperparams:
    """Hyperparameters of the dynamic topic model.

    ``sigma2`` is the topic-chain step variance, ``delta2`` the
    proportion-chain step variance, ``a2`` the per-document proportion
    variance and ``alpha0`` the initial proportion mean (scalar or length-K
    vector; 0 means uniform proportions). Zero step variances are legal
    for the generator (frozen chains) but fitting requires them positive.
    """

    n_topics: int
    sigma2: float = 0.005
    delta2: float = 0.01
    a2: float = 1.0
    alpha0: object = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 2:
            raise DimensionMismatch("n_topics must be >= 2")
        if self.sigma2 < 0 or self.delta2 < 0 or self.a2 <= 0:
            raise DimensionMismatch(
                "sigma2 and delta2 must be >= 0 and a2 must be > 0"
            )

    def alpha0_vector(self):
        alpha = np.asarray(self.alpha0, dtype=float)
        if alpha.ndim == 0:
            return np.full(self.n_topics, float(alpha))
        if alpha.shape != (self.n_topics,):
            raise DimensionMismatch("alpha0 vector must have length n_topics")
        return alpha.copy()

    def to_dict(self):
        alpha = np.asarray(self.alpha0, dtype=float)
        return {
            "n_topics": int(self.n_topics),
            "sigma2": float(self.sigma2),
            "delta2": float(self.delta2),
            "a2": float(self.a2),
            "alpha0": float(alpha) if alpha.ndim == 0 else alpha.tolist(),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, data):
        alpha0 = data.get("alpha0", 0.0)
        if isinstance(alpha0, list):
            alpha0 = np.asarray(alpha0, dtype=float)
        return cls(
            n_topics=int(data["n_topics"]),
            sigma2=float(data.get("sigma2", 0.005)),
            delta2=float(data.get("delta2", 0.01)),
            a2=float(data.get("a2", 1.0)),
            alpha0=alpha0,
            seed=int(data.get("seed", 0)),
        )


@dataclass
class TopicChain:
    """Per-slice natural parameters of one topic: shape (n_slices, vocab)."""

    natural_params: np.ndarray

    def __post_init__(self):
        self.natural_params = np.asarray(self.natural_params, dtype=float)
        if self.natural_params.ndim != 2:
            raise DimensionMismatch("natural_params must be 2-d (slices, vocab)")

    @property
    def n_slices(self):
        return self.natural_params.shape[0]

    def probabilities(self):
        """Per-slice word distributions, shape (n_slices, vocab)."""
        return softmax(self.natural_params, axis=1)

    def time_averaged_probabilities(self):
        """Word distribution averaged uniformly over slices."""
        return self.probabilities().mean(axis=0)


@dataclass
class FittedModel:
    """Everything a fit produces: chains, proportion path, document mixtures."""

    chains: list
    alpha_path: np.ndarray  # (n_slices, n_topics)
    doc_theta: np.ndarray  # (n_docs, n_topics), rows sum to 1
    doc_slice: np.ndarray  # (n_docs,) slice index per document
    eta: np.ndarray  # (n_docs, n_topics) natural parameters, theta = softmax(eta)
    train_log: dict
    vocabulary: list
    slice_labels: list
    doc_ids: list
    hyper: Hyperparams
    corpus_hash: str = ""
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha_path = np.asarray(self.alpha_path, dtype=float)
        self.doc_theta = np.asarray(self.doc_theta, dtype=float)
        self.doc_slice = np.asarray(self.doc_slice, dtype=int)
        self.eta = np.asarray(self.eta, dtype=float)
        T, V = len(self.slice_labels), len(self.vocabulary)
        for chain in self.chains:
            if chain.natural_params.shape != (T, V):
                raise DimensionMismatch(
                    "topic chain shape does not match corpus slices/vocabulary"
                )
        if self.alpha_path.shape != (T, self.n_topics):
            raise DimensionMismatch("alpha_path shape mismatch")

    @property
    def n_topics(self):
        return len(self.chains)

    @property
    def n_slices(self):
        return len(self.slice_labels)

    @property
    def n_docs(self):
        return len(self.doc_ids)

    def topic_probabilities(self, topic_id):
        """Per-slice word distributions of one topic, shape (n_slices, vocab)."""
        return self.chains[topic_id].probabilities()

    def betas_array(self):
        """All chains stacked: shape (n_topics, n_slices, vocab)."""
        return np.stack([c.natural_params for c in self.chains])

    def theta_column(self, topic_id):
        """The proportion of ``topic_id`` in every document."""
        return self.doc_theta[:, topic_id]

    # -- persistence ---------------------------------------------------

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_json(
            directory / "model.json",
            {
                "format_version": MODEL_FORMAT_VERSION,
                "hyperparams": self.hyper.to_dict(),
                "train_log": self.train_log,
                "vocabulary": list(self.vocabulary),
                "slice_labels": list(self.slice_labels),
                "doc_ids": list(self.doc_ids),
                "corpus_hash": self.corpus_hash,
                "extras": self.extras,
            },
        )
        np.save(directory / "betas.npy", self.betas_array())
        np.save(directory / "alpha_path.npy", self.alpha_path)
        np.save(directory / "theta.npy", self.doc_theta)
        np.save(directory / "eta.npy", self.eta)
        np.save(directory / "doc_slice.npy", self.doc_slice)
        return directory

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        meta_path = directory / "model.json"
        if not meta_path.exists():
            raise DataError(f"model archive not found: {directory}")
        meta = read_json(meta_path)
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise DataError(
                f"unsupported model format {meta.get('format_version')!r}"
            )
        betas = np.load(directory / "betas.npy")
        return cls(
            chains=[TopicChain(b) for b in betas],
            alpha_path=np.load(directory / "alpha_path.npy"),
            doc_theta=np.load(directory / "theta.npy"),
            doc_slice=np.load(directory / "doc_slice.npy"),
            eta=np.load(directory / "eta.npy"),
            train_log=meta["train_log"],
            vocabulary=meta["vocabulary"],
            slice_labels=meta["slice_labels"],
            doc_ids=meta["doc_ids"],
            hyper=Hyperparams.from_dict(meta["hyperparams"]),
            corpus_hash=meta.get("corpus_hash", ""),
            extras=meta.get("extras", {}),
        )
