"""Orthographic correction against a frequency lexicon.

Candidate generation uses a deletion-neighborhood index: every lexicon
word is filed under all strings reachable by deleting up to
``max_edit_distance`` characters, and a query token is matched by looking
up its own deletions. Hits are then verified with the true Levenshtein
distance, so the index only has to be complete, not exact. Replacement is
deterministic: the highest-frequency candidate within the distance bound
wins, ties broken lexicographically.
"""

from __future__ import annotations

import itertools
from weakref import WeakKeyDictionary

from .errors import EmptyDictionary

__all__ = ["SpellCorrector", "get_corrector", "levenshtein"]

_corrector_cache = WeakKeyDictionary()


def levenshtein(a, b, cutoff=None):
    """Edit distance between ``a`` and ``b`` (insert/delete/substitute).

    With ``cutoff`` set, returns ``cutoff + 1`` as soon as the distance
    provably exceeds it.
    """
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if cutoff is not None and len(a) - len(b) > cutoff:
        return cutoff + 1
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        if cutoff is not None and min(current) > cutoff:
            return cutoff + 1
        previous = current
    return previous[-1]


def _deletions(word, max_deletes):
    """All strings reachable from ``word`` by up to ``max_deletes`` deletions."""
    out = {word}
    frontier = {word}
    for _ in range(max_deletes):
        frontier = {
            w[:i] + w[i + 1 :] for w in frontier for i in range(len(w))
        } - out
        out |= frontier
    return out


class SpellCorrector:
    """Correct unknown tokens using a :class:`~diatopic.dictionaries.DictionaryBundle`.

    Custom-lexicon words participate as candidates with frequency 0, so a
    frequency-dict candidate always outranks them at equal distance.
    """

    def __init__(self, dicts, max_edit_distance=2):
        if not dicts.frequency_dict:
            raise EmptyDictionary("frequency lexicon is empty")
        self.dicts = dicts
        self.max_edit_distance = int(max_edit_distance)
        self._frequencies = dict(dicts.frequency_dict)
        for word in dicts.custom_dict:
            self._frequencies.setdefault(word, 0.0)
        self._index = {}
        for word in self._frequencies:
            for key in _deletions(word, self.max_edit_distance):
                self._index.setdefault(key, []).append(word)

    def candidates(self, token):
        """Lexicon words within the distance bound, as ``(word, frequency)``."""
        buckets = (
            self._index.get(key, ())
            for key in _deletions(token, self.max_edit_distance)
        )
        seen = set(itertools.chain.from_iterable(buckets))
        return [
            (word, self._frequencies[word])
            for word in seen
            if levenshtein(token, word, cutoff=self.max_edit_distance)
            <= self.max_edit_distance
        ]

    def best_replacement(self, token):
        """Highest-frequency candidate for ``token``, or None if there is none."""
        found = self.candidates(token)
        if not found:
            return None
        return min(found, key=lambda wf: (-wf[1], wf[0]))[0]


def get_corrector(dicts, max_edit_distance=2):
    """Memoized :class:`SpellCorrector` for a bundle (index building is costly)."""
    per_bundle = _corrector_cache.setdefault(dicts, {})
    if max_edit_distance not in per_bundle:
        per_bundle[max_edit_distance] = SpellCorrector(dicts, max_edit_distance)
    return per_bundle[max_edit_distance]
