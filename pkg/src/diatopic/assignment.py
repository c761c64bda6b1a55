"""Document-to-topic assignment and the human area taxonomy on top of it.

A document *belongs* to a topic when it sits in the shortest
proportion-sorted prefix covering the requested share of the topic's
total proportion mass (uniform prior over documents, so likelihood
reduces to proportions). Human-authored tags then lift topics into a
fixed taxonomy of five main areas plus Other, with free-form subareas
and a historical flag.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DuplicateTopicId,
    NoTopicsInArea,
    ParseError,
    UnknownDocId,
    UnknownMainArea,
)

__all__ = [
    "MAIN_AREAS",
    "TopicTags",
    "TopicAssignment",
    "assign_documents",
    "load_tags",
    "area_word_profile",
    "area_counts_by_year",
    "historical_ratio_series",
    "AreaYearCounts",
    "HistoricalSeries",
]

logger = logging.getLogger(__name__)

MAIN_AREAS = (
    "ValueTheory",
    "MetaphysicsEpistemology",
    "ScienceLogicMath",
    "HistoryWesternPhil",
    "PhilTraditions",
    "Other",
)

# lenient spellings accepted in tags files, keyed by lowercased alnum form
_AREA_ALIASES = {re.sub(r"[^a-z]", "", a.lower()): a for a in MAIN_AREAS}
_AREA_ALIASES.update(
    {
        "valuetheory": "ValueTheory",
        "metaphysicsandepistemology": "MetaphysicsEpistemology",
        "sciencelogicandmathematics": "ScienceLogicMath",
        "sciencelogicmathematics": "ScienceLogicMath",
        "historyofwesternphilosophy": "HistoryWesternPhil",
        "philosophicaltraditions": "PhilTraditions",
    }
)

HISTORICAL_TAG = "#historical"


@dataclass
class TopicTags:
    """Human labels for one topic: main area, subareas, historical flag."""

    topic_id: int
    main_area: str
    subareas: list = field(default_factory=list)
    historical: bool = False

    def __post_init__(self):
        if self.main_area not in MAIN_AREAS:
            raise UnknownMainArea(f"unknown main area {self.main_area!r}")


@dataclass
class TopicAssignment:
    """Documents attached to one topic by the mass rule.

    ``docs`` is ordered by descending proportion (doc id breaks ties);
    ``mass_covered`` is the fraction of the topic's total proportion the
    prefix actually covers (always >= the requested mass, and dropping
    the last document would fall below it).
    """

    topic_id: int
    docs: list  # [(doc_id, proportion), ...]
    mass_covered: float

    @property
    def doc_ids(self):
        return [doc_id for doc_id, _ in self.docs]


def assign_documents(model, topic_id, mass=0.5):
    """Attach to ``topic_id`` the smallest document prefix covering ``mass``.

    All documents are sorted by their proportion of the topic
    (descending, stable by doc id) and the shortest prefix whose
    proportion sum reaches ``mass`` times the column total is returned.
    """
    if not 0.0 < mass <= 1.0:
        raise DataError("mass must be in (0, 1]")
    column = np.asarray(model.doc_theta[:, topic_id], dtype=float)
    ids = model.doc_ids
    order = sorted(range(len(ids)), key=lambda i: (-column[i], ids[i]))
    total = float(column.sum())
    if total <= 0.0:
        return TopicAssignment(topic_id=topic_id, docs=[], mass_covered=1.0)
    target = mass * total
    docs = []
    covered = 0.0
    for i in order:
        docs.append((ids[i], float(column[i])))
        covered += float(column[i])
        if covered >= target:
            break
    return TopicAssignment(
        topic_id=topic_id, docs=docs, mass_covered=covered / total
    )


def load_tags(path, num_topics=None):
    """Read a tab-separated tags file into :class:`TopicTags` records.

    Expected header: ``topic_id  main_area  subareas  historical`` with
    subareas separated by semicolons. A ``#historical`` entry among the
    subareas also sets the flag. With ``num_topics`` given, topics missing
    from the file default to Other (with a warning) and ids outside
    ``[0, num_topics)`` are rejected.

    Raises
    ------
    ParseError, DuplicateTopicId, UnknownMainArea
        All carrying 1-based line numbers.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"tags file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    records = {}
    first_line_of = {}
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("\t")]
        if not header_seen:
            header_seen = True
            expected = ["topic_id", "main_area", "subareas", "historical"]
            if [p.lower() for p in parts] != expected:
                raise ParseError(
                    f"expected header {expected}, got {parts}", line=lineno
                )
            continue
        if len(parts) != 4:
            raise ParseError(
                f"expected 4 tab-separated fields, got {len(parts)}", line=lineno
            )
        id_text, area_text, sub_text, hist_text = parts
        try:
            topic_id = int(id_text)
        except ValueError:
            raise ParseError(f"bad topic_id {id_text!r}", line=lineno) from None
        if topic_id in records:
            raise DuplicateTopicId(
                f"topic {topic_id} already defined on line "
                f"{first_line_of[topic_id]}",
                line=lineno,
            )
        if num_topics is not None and not 0 <= topic_id < num_topics:
            raise ParseError(
                f"topic_id {topic_id} outside [0, {num_topics})", line=lineno
            )
        area_key = re.sub(r"[^a-z]", "", area_text.lower())
        if area_key not in _AREA_ALIASES:
            raise UnknownMainArea(
                f"unknown main area {area_text!r}", line=lineno
            )
        subareas = [s.strip() for s in sub_text.split(";") if s.strip()]
        historical = hist_text.strip().lower() in ("true", "1", "yes")
        if HISTORICAL_TAG in (s.lower() for s in subareas):
            historical = True
            subareas = [s for s in subareas if s.lower() != HISTORICAL_TAG]
        records[topic_id] = TopicTags(
            topic_id=topic_id,
            main_area=_AREA_ALIASES[area_key],
            subareas=subareas,
            historical=historical,
        )
        first_line_of[topic_id] = lineno

    if num_topics is not None:
        for topic_id in range(num_topics):
            if topic_id not in records:
                logger.warning(
                    "topic %d missing from tags file, defaulting to Other",
                    topic_id,
                )
                records[topic_id] = TopicTags(topic_id=topic_id, main_area="Other")
    return [records[k] for k in sorted(records)]


def area_word_profile(model, tags, area, top_n=10):
    """Top words of a main area, averaged over its topics and all slices.

    Every tagged topic contributes its word distribution averaged over
    time with uniform weight; the pooled distribution is ranked and the
    ``top_n`` words returned as ``(token, probability)`` pairs.
    """
    if area not in MAIN_AREAS:
        raise UnknownMainArea(f"unknown main area {area!r}")
    topic_ids = [t.topic_id for t in tags if t.main_area == area]
    if not topic_ids:
        raise NoTopicsInArea(f"no topic tagged with area {area!r}")
    avg = np.mean(
        [model.chains[k].time_averaged_probabilities() for k in topic_ids],
        axis=0,
    )
    order = np.argsort(-avg, kind="stable")[: int(top_n)]
    return [(model.vocabulary[j], float(avg[j])) for j in order]


@dataclass
class AreaYearCounts:
    """Per-area yearly counts and ratios, plus the yearly totals used."""

    counts: dict  # area -> {year: n_docs}
    ratios: dict  # area -> {year: n_docs / total_that_year}
    year_totals: dict  # year -> total docs published
    area_totals: dict  # area -> deduplicated doc count


def area_counts_by_year(assignments, tags, docs):
    """Aggregate topic assignments into per-area, per-year document counts.

    A document counts once per main area no matter how many of its topics
    share that area, but may count in several areas. Ratios divide by the
    total number of documents published that year.

    Parameters
    ----------
    assignments : list of TopicAssignment
    tags : list of TopicTags
    docs : dict or iterable of (doc_id, year)
        Year of every document in the corpus.
    """
    years = dict(docs)
    area_of = {t.topic_id: t.main_area for t in tags}
    area_docs = {area: set() for area in MAIN_AREAS}
    for assignment in assignments:
        area = area_of.get(assignment.topic_id)
        if area is None:
            raise DataError(f"no tags for topic {assignment.topic_id}")
        for doc_id, _ in assignment.docs:
            if doc_id not in years:
                raise UnknownDocId(f"no year for document {doc_id!r}")
            area_docs[area].add(doc_id)

    year_totals = {}
    for year in years.values():
        year_totals[int(year)] = year_totals.get(int(year), 0) + 1

    counts = {}
    ratios = {}
    for area in MAIN_AREAS:
        per_year = {}
        for doc_id in area_docs[area]:
            y = int(years[doc_id])
            per_year[y] = per_year.get(y, 0) + 1
        counts[area] = dict(sorted(per_year.items()))
        ratios[area] = {
            y: n / year_totals[y] for y, n in sorted(per_year.items())
        }
    return AreaYearCounts(
        counts=counts,
        ratios=ratios,
        year_totals=dict(sorted(year_totals.items())),
        area_totals={area: len(area_docs[area]) for area in MAIN_AREAS},
    )


@dataclass
class HistoricalSeries:
    """Yearly historical-topic document ratio plus the corpus-level ratio."""

    series: list  # [(year, ratio)], years with zero documents omitted
    overall_ratio: float
    yearly_counts: dict  # year -> (historical docs, total docs)


def historical_ratio_series(assignments, tags, docs, from_year=None):
    """Share of each year's documents assigned to >= 1 historical topic.

    The yearly series starts at ``from_year`` (when given); the overall
    ratio always covers the whole corpus.
    """
    years = dict(docs)
    historical_topics = {t.topic_id for t in tags if t.historical}
    hist_docs = set()
    for assignment in assignments:
        if assignment.topic_id in historical_topics:
            for doc_id, _ in assignment.docs:
                if doc_id not in years:
                    raise UnknownDocId(f"no year for document {doc_id!r}")
                hist_docs.add(doc_id)

    year_totals = {}
    year_hist = {}
    for doc_id, year in years.items():
        y = int(year)
        year_totals[y] = year_totals.get(y, 0) + 1
        if doc_id in hist_docs:
            year_hist[y] = year_hist.get(y, 0) + 1

    series = []
    yearly_counts = {}
    for y in sorted(year_totals):
        if from_year is not None and y < from_year:
            continue
        n_hist = year_hist.get(y, 0)
        series.append((y, n_hist / year_totals[y]))
        yearly_counts[y] = (n_hist, year_totals[y])
    overall = len(hist_docs) / len(years) if years else 0.0
    return HistoricalSeries(
        series=series, overall_ratio=overall, yearly_counts=yearly_counts
    )
