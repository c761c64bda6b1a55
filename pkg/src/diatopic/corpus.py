"""Vocabulary-indexed, time-sliced bag-of-words corpora.

A :class:`TimeSlicedCorpus` groups sparse count vectors into ordered time
slices; it is the input to dynamic topic fitting and the unit persisted by
the corpus archive (JSON with ``(index, count)`` pairs).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import AllTokensFiltered, DataError, EmptyCorpus
from .manifest import canonical_json, read_json, sha256_bytes, write_json

__all__ = ["CorpusSlice", "TimeSlicedCorpus", "build_time_slices"]

ARCHIVE_FORMAT_VERSION = 1


@dataclass
class CorpusSlice:
    """One time slice: a period label plus per-document count vectors."""

    label: str
    doc_ids: list
    counts: sp.csr_matrix  # shape (n_docs, vocab_size)

    @property
    def n_docs(self):
        return len(self.doc_ids)


@dataclass
class TimeSlicedCorpus:
    """Ordered time slices over a shared vocabulary."""

    vocabulary: list
    slices: list
    slice_rule: dict = field(default_factory=dict)

    def __post_init__(self):
        self._token_index = None

    @property
    def vocab_size(self):
        return len(self.vocabulary)

    @property
    def n_slices(self):
        return len(self.slices)

    @property
    def n_docs(self):
        return sum(s.n_docs for s in self.slices)

    @property
    def slice_labels(self):
        return [s.label for s in self.slices]

    @property
    def token_index(self):
        """Token -> column index (built lazily, cached)."""
        if self._token_index is None:
            self._token_index = {t: i for i, t in enumerate(self.vocabulary)}
        return self._token_index

    def doc_ids(self):
        """All document ids in slice order."""
        out = []
        for s in self.slices:
            out.extend(s.doc_ids)
        return out

    def doc_slice_indices(self):
        """Slice index of every document, aligned with :meth:`doc_ids`."""
        out = []
        for t, s in enumerate(self.slices):
            out.extend([t] * s.n_docs)
        return np.asarray(out, dtype=int)

    def stacked_counts(self):
        """All count vectors vertically stacked in slice order (CSR)."""
        return sp.vstack([s.counts for s in self.slices], format="csr")

    def subset_by_ids(self, keep_ids, keep_empty_slices=False):
        """New corpus restricted to ``keep_ids`` (same vocabulary, same labels)."""
        keep = set(keep_ids)
        slices = []
        for s in self.slices:
            mask = [i for i, d in enumerate(s.doc_ids) if d in keep]
            if not mask and not keep_empty_slices:
                continue
            slices.append(
                CorpusSlice(
                    label=s.label,
                    doc_ids=[s.doc_ids[i] for i in mask],
                    counts=s.counts[mask],
                )
            )
        rule = dict(self.slice_rule)
        rule["subset_of"] = self.content_hash()
        return TimeSlicedCorpus(self.vocabulary, slices, rule)

    def to_dict(self):
        slices = []
        for s in self.slices:
            docs = []
            for i, doc_id in enumerate(s.doc_ids):
                row = s.counts.getrow(i).tocoo()
                pairs = sorted(
                    (int(j), int(round(v))) for j, v in zip(row.col, row.data)
                )
                docs.append({"id": doc_id, "counts": pairs})
            slices.append({"label": s.label, "docs": docs})
        return {
            "format_version": ARCHIVE_FORMAT_VERSION,
            "vocabulary": list(self.vocabulary),
            "slice_rule": self.slice_rule,
            "slices": slices,
        }

    @classmethod
    def from_dict(cls, data):
        vocabulary = list(data["vocabulary"])
        V = len(vocabulary)
        slices = []
        for block in data["slices"]:
            doc_ids = [d["id"] for d in block["docs"]]
            mat = sp.lil_matrix((len(doc_ids), V))
            for i, d in enumerate(block["docs"]):
                for j, v in d["counts"]:
                    if not 0 <= j < V:
                        raise DataError(
                            f"count index {j} out of range for vocabulary of {V}"
                        )
                    mat[i, j] = v
            slices.append(
                CorpusSlice(label=block["label"], doc_ids=doc_ids, counts=mat.tocsr())
            )
        return cls(vocabulary, slices, dict(data.get("slice_rule", {})))

    def save(self, path):
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise DataError(f"corpus archive not found: {path}")
        return cls.from_dict(read_json(path))

    def content_hash(self):
        """SHA-256 of the canonical archive serialization."""
        return sha256_bytes(canonical_json(self.to_dict()))


def build_time_slices(docs, bin_years, min_df=2):
    """Bin cleaned documents into year slices over a pruned vocabulary.

    Documents land in bin ``floor((year - first_year) / bin_years)``; bins
    with no documents are dropped and recorded in ``slice_rule``. The
    vocabulary keeps tokens whose document frequency is at least
    ``min_df`` (sorted lexicographically); documents left without any
    in-vocabulary token are dropped and recorded too.

    Parameters
    ----------
    docs : list of CleanDocument
    bin_years : int
        Slice width in years, >= 1.
    min_df : int
        Document-frequency floor for the vocabulary.

    Raises
    ------
    EmptyCorpus
        If ``docs`` is empty.
    AllTokensFiltered
        If pruning removes every token.
    """
    if not docs:
        raise EmptyCorpus("no documents to slice")
    bin_years = int(bin_years)
    if bin_years < 1:
        raise ValueError("bin_years must be >= 1")

    df = Counter()
    for doc in docs:
        df.update(set(doc.tokens))
    vocabulary = sorted(t for t, c in df.items() if c >= min_df)
    if not vocabulary:
        raise AllTokensFiltered(
            f"no token reaches document frequency {min_df}"
        )
    index = {t: i for i, t in enumerate(vocabulary)}

    first_year = min(d.year for d in docs)
    binned = {}
    empty_docs = []
    for doc in docs:
        counts = Counter(t for t in doc.tokens if t in index)
        if not counts:
            empty_docs.append(doc.id)
            continue
        b = (doc.year - first_year) // bin_years
        binned.setdefault(b, []).append((doc.id, counts))

    def label_for(b):
        start = first_year + b * bin_years
        if bin_years == 1:
            return str(start)
        return f"{start}-{start + bin_years - 1}"

    slices = []
    occupied = sorted(binned)
    dropped = [
        label_for(b) for b in range(occupied[0], occupied[-1] + 1) if b not in binned
    ]
    V = len(vocabulary)
    for b in occupied:
        doc_ids = [doc_id for doc_id, _ in binned[b]]
        mat = sp.lil_matrix((len(doc_ids), V))
        for i, (_, counts) in enumerate(binned[b]):
            for token, c in counts.items():
                mat[i, index[token]] = c
        slices.append(CorpusSlice(label=label_for(b), doc_ids=doc_ids, counts=mat.tocsr()))

    rule = {
        "kind": "year-bins",
        "bin_years": bin_years,
        "first_year": first_year,
        "min_df": int(min_df),
        "dropped_periods": dropped,
        "empty_doc_ids": sorted(empty_docs),
    }
    return TimeSlicedCorpus(vocabulary, slices, rule)
