"""Lexical resources for cleaning: frequency lexicon, stopwords, lemma table.

A :class:`DictionaryBundle` is immutable after construction and safe to
share across worker processes. Construction sanitizes the resources so the
token pipeline (correction -> stopword removal -> lemmatization) is
idempotent:

* protected words are dropped from the stopword list (protection wins) and
  from the lemma-table domain, so they survive every stage unchanged;
* lemma chains (a -> b, b -> c) are resolved to their terminal lemma;
* lemma targets that would be re-filtered on a second pass (effective
  stopwords, or shorter than ``min_token_len``) lose their mapping;
* lemma targets are added to the custom lexicon so correction never
  rewrites them.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .errors import ParseError

__all__ = [
    "DictionaryBundle",
    "load_frequency_dict",
    "load_token_set",
    "load_lemma_table",
]

logger = logging.getLogger(__name__)


class DictionaryBundle:
    """Bundle of lexical resources used by the cleaning pipeline.

    Parameters
    ----------
    frequency_dict : dict of str -> float
        Base recognition lexicon with nonnegative frequencies. Counts are
        accepted; they are normalized to relative frequencies.
    custom_dict : set of str, optional
        Corpus-derived technical lexicon; recognized but carries no
        frequency (never preferred over a frequency-dict candidate in
        correction ties).
    lemma_table : dict of str -> str, optional
        Surface form -> lemma.
    stopwords : set of str, optional
    protected : set of str, optional
        Words that must survive every stage unchanged.
    min_token_len : int
        Token length floor used by the tokenizer; lemma targets below it
        are not allowed (see module docstring).
    """

    def __init__(
        self,
        frequency_dict,
        custom_dict=None,
        lemma_table=None,
        stopwords=None,
        protected=None,
        min_token_len=3,
    ):
        frequency_dict = dict(frequency_dict or {})
        for token, value in frequency_dict.items():
            if value < 0:
                raise ParseError(f"negative frequency for token {token!r}")
        total = sum(frequency_dict.values())
        if total > 0:
            frequency_dict = {t: v / total for t, v in frequency_dict.items()}
        self.frequency_dict = frequency_dict
        self.protected = frozenset(protected or ())
        self.stopwords = frozenset(stopwords or ())
        self.min_token_len = int(min_token_len)

        custom = set(custom_dict or ())
        lemmas = self._sanitize_lemma_table(dict(lemma_table or {}))
        custom.update(lemmas.values())
        self.custom_dict = frozenset(custom)
        self.lemma_table = lemmas

    @property
    def effective_stopwords(self):
        """Stopword list with protected words removed (protection wins)."""
        return self.stopwords - self.protected

    def recognizes(self, token):
        """True if ``token`` belongs to the recognition lexicon."""
        return (
            token in self.frequency_dict
            or token in self.custom_dict
            or token in self.protected
        )

    def _sanitize_lemma_table(self, table):
        effective_stop = self.stopwords - self.protected
        for word in self.protected:
            table.pop(word, None)

        resolved = {}
        for surface, lemma in table.items():
            seen = {surface}
            while lemma in table and table[lemma] != lemma and lemma not in seen:
                seen.add(lemma)
                lemma = table[lemma]
            if lemma == surface:
                continue
            if lemma in effective_stop or len(lemma) < self.min_token_len:
                logger.debug("dropping lemma mapping %r -> %r", surface, lemma)
                continue
            resolved[surface] = lemma
        return resolved

    @classmethod
    def from_paths(
        cls,
        frequency_path,
        custom_path=None,
        lemma_path=None,
        stopword_paths=(),
        protected_path=None,
        min_token_len=3,
    ):
        """Load a bundle from the on-disk formats (see the loader functions)."""
        stopwords = set()
        for path in stopword_paths:
            stopwords |= load_token_set(path)
        return cls(
            frequency_dict=load_frequency_dict(frequency_path),
            custom_dict=load_token_set(custom_path) if custom_path else None,
            lemma_table=load_lemma_table(lemma_path) if lemma_path else None,
            stopwords=stopwords,
            protected=load_token_set(protected_path) if protected_path else None,
            min_token_len=min_token_len,
        )


def load_frequency_dict(path):
    """Read a two-column text file ``token count`` into a dict.

    Repeated tokens accumulate. Blank lines and ``#`` comments are skipped.
    """
    out = {}
    for lineno, raw in enumerate(_lines(path), start=1):
        parts = raw.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'token count', got {raw!r}", line=lineno)
        token, count = parts
        try:
            value = float(count)
        except ValueError:
            raise ParseError(f"non-numeric count {count!r}", line=lineno) from None
        if value < 0:
            raise ParseError(f"negative count for {token!r}", line=lineno)
        out[token] = out.get(token, 0.0) + value
    return out


def load_token_set(path):
    """Read a one-token-per-line UTF-8 file into a set."""
    return {raw for raw in _lines(path)}


def load_lemma_table(path):
    """Read a two-column text file ``surface lemma`` into a dict."""
    out = {}
    for lineno, raw in enumerate(_lines(path), start=1):
        parts = raw.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'surface lemma', got {raw!r}", line=lineno)
        out[parts[0]] = parts[1]
    return out


def _lines(path):
    text = Path(path).read_text(encoding="utf-8")
    for raw in text.splitlines():
        raw = raw.strip()
        if raw and not raw.startswith("#"):
            yield raw
