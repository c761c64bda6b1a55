"""Table and plot-data emitters for the report stage.

Every table is written twice: a CSV for plotting/spreadsheets and a JSON
sidecar with identical content. All numeric formatting is deterministic
(shortest round-trip repr), so reports are byte-reproducible.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .assignment import MAIN_AREAS, area_counts_by_year, area_word_profile, historical_ratio_series
from .errors import DataError, DegenerateX, InsufficientData, NoTopicsInArea
from .manifest import write_json
from .trend import ols_fit

__all__ = [
    "write_table",
    "period_table",
    "area_counts_table",
    "area_profile_table",
    "subarea_table",
    "largest_subarea_series",
    "historical_topics_table",
    "trend_tables",
    "emit_report",
]

logger = logging.getLogger(__name__)


def _fmt(value):
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path, header, rows):
    """Write rows as CSV plus a JSON sidecar with the same records."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    records = [
        dict(
            zip(
                header,
                [v.item() if isinstance(v, np.generic) else v for v in row],
            )
        )
        for row in rows
    ]
    write_json(path.with_suffix(".json"), records)
    return path


def period_table(year_rows, bin_years=5):
    """Per-period document counts and average usable length.

    ``year_rows`` are (doc_id, year, usable_words) triples for the whole
    ingested corpus.
    """
    if not year_rows:
        return []
    years = [int(y) for _, y, _ in year_rows]
    first = min(years)
    bins = {}
    for _, year, length in year_rows:
        b = (int(year) - first) // int(bin_years)
        bins.setdefault(b, []).append(float(length))
    rows = []
    for b in sorted(bins):
        start = first + b * int(bin_years)
        lengths = bins[b]
        rows.append(
            (start, start + int(bin_years) - 1, len(lengths),
             sum(lengths) / len(lengths))
        )
    return rows


def area_counts_table(assignments, tags, years):
    """Fig-4-style rows: (year, area, n_docs, total_docs_year, ratio)."""
    counts = area_counts_by_year(assignments, tags, years)
    rows = []
    for area in MAIN_AREAS:
        for year, n in counts.counts[area].items():
            rows.append(
                (year, area, n, counts.year_totals[year], counts.ratios[area][year])
            )
    rows.sort(key=lambda r: (r[0], MAIN_AREAS.index(r[1])))
    return rows, counts


def area_profile_table(model, tags, top_n=10):
    """Table-2-style rows: (area, rank, word, probability)."""
    rows = []
    for area in MAIN_AREAS:
        try:
            profile = area_word_profile(model, tags, area, top_n=top_n)
        except NoTopicsInArea:
            continue
        for rank, (word, prob) in enumerate(profile, start=1):
            rows.append((area, rank, word, prob))
    return rows


def _group_profile(model, topic_ids, top_n):
    avg = np.mean(
        [model.chains[k].time_averaged_probabilities() for k in topic_ids],
        axis=0,
    )
    order = np.argsort(-avg, kind="stable")[:top_n]
    return [model.vocabulary[j] for j in order]


def subarea_table(model, tags, assignments, top_n=10):
    """Table-3-style rows: (area, subarea, n_docs, top words ;-joined).

    A subarea aggregates every topic tagged with it; a document counts
    once per subarea no matter how many of the subarea's topics claim it.
    """
    by_topic = {a.topic_id: a for a in assignments}
    groups = {}
    for tag in tags:
        for sub in tag.subareas:
            groups.setdefault((tag.main_area, sub), []).append(tag.topic_id)
    rows = []
    for (area, sub), topic_ids in groups.items():
        docs = set()
        for k in topic_ids:
            docs.update(doc_id for doc_id, _ in by_topic[k].docs)
        words = _group_profile(model, topic_ids, top_n)
        rows.append((area, sub, len(docs), "; ".join(words)))
    rows.sort(key=lambda r: (MAIN_AREAS.index(r[0]), -r[2], r[1]))
    return rows


def largest_subarea_series(model, tags, assignments, years, sub_rows):
    """Fig-5-style rows: (year, area, area_ratio, largest_subarea, subarea_ratio)."""
    year_table = dict(years)
    year_totals = {}
    for y in year_table.values():
        year_totals[int(y)] = year_totals.get(int(y), 0) + 1
    by_topic = {a.topic_id: a for a in assignments}
    _, counts = area_counts_table(assignments, tags, years)

    largest = {}
    for area, sub, n_docs, _ in sub_rows:
        if area not in largest or n_docs > largest[area][1]:
            largest[area] = (sub, n_docs)

    rows = []
    for area in MAIN_AREAS:
        if area not in largest:
            continue
        sub, _ = largest[area]
        topic_ids = [
            t.topic_id for t in tags if t.main_area == area and sub in t.subareas
        ]
        sub_docs = set()
        for k in topic_ids:
            sub_docs.update(doc_id for doc_id, _ in by_topic[k].docs)
        sub_by_year = {}
        for doc_id in sub_docs:
            y = int(year_table[doc_id])
            sub_by_year[y] = sub_by_year.get(y, 0) + 1
        for year in sorted(year_totals):
            area_ratio = counts.ratios[area].get(year, 0.0)
            sub_ratio = sub_by_year.get(year, 0) / year_totals[year]
            if area_ratio == 0.0 and sub_ratio == 0.0:
                continue
            rows.append((year, area, area_ratio, sub, sub_ratio))
    rows.sort(key=lambda r: (MAIN_AREAS.index(r[1]), r[0]))
    return rows


def historical_topics_table(model, tags, assignments, top_n=10):
    """Table-5-style rows: (topic_id, area, subareas, top words, n_docs)."""
    by_topic = {a.topic_id: a for a in assignments}
    rows = []
    for tag in tags:
        if not tag.historical:
            continue
        n_docs = len(by_topic[tag.topic_id].docs)
        words = _group_profile(model, [tag.topic_id], top_n)
        rows.append(
            (tag.topic_id, tag.main_area, "; ".join(tag.subareas),
             "; ".join(words), n_docs)
        )
    rows.sort(key=lambda r: (-r[4], r[0]))
    return rows


def trend_tables(assignments, tags, years, from_year=None):
    """Fig-6 data: ((year, ratio, fitted, lo, hi) rows, TrendResult, series)."""
    hist = historical_ratio_series(assignments, tags, years, from_year=from_year)
    if len(hist.series) < 3:
        raise InsufficientData(
            f"only {len(hist.series)} usable years; need at least 3"
        )
    xs = np.array([y for y, _ in hist.series], dtype=float)
    ys = np.array([r for _, r in hist.series], dtype=float)
    result = ols_fit(xs, ys)
    rows = [
        (int(x), y, f, lo, hi)
        for x, y, f, lo, hi in zip(
            xs, ys, result.fitted, result.ci_lower, result.ci_upper
        )
    ]
    return rows, result, hist


def emit_report(
    output_dir,
    model,
    tags,
    years,
    doc_lengths_rows,
    assignments,
    from_year=None,
    report_bin_years=5,
    top_n=10,
):
    """Write every report table into ``output_dir``; returns written paths.

    ``years`` maps doc_id -> year for the whole corpus;
    ``doc_lengths_rows`` are (doc_id, year, usable_words) triples.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []

    rows = period_table(doc_lengths_rows, bin_years=report_bin_years)
    written.append(
        write_table(
            output_dir / "fig2_periods.csv",
            ["period_start", "period_end", "n_documents", "avg_length"],
            rows,
        )
    )

    area_rows, _ = area_counts_table(assignments, tags, years)
    written.append(
        write_table(
            output_dir / "fig4_area_counts.csv",
            ["year", "area", "n_docs", "total_docs_year", "ratio"],
            area_rows,
        )
    )

    profile_rows = area_profile_table(model, tags, top_n=top_n)
    written.append(
        write_table(
            output_dir / "table2_area_profiles.csv",
            ["area", "rank", "word", "probability"],
            profile_rows,
        )
    )

    sub_rows = subarea_table(model, tags, assignments, top_n=top_n)
    written.append(
        write_table(
            output_dir / "table3_subareas.csv",
            ["area", "subarea", "n_docs", "top_words"],
            sub_rows,
        )
    )

    fig5_rows = largest_subarea_series(model, tags, assignments, years, sub_rows)
    written.append(
        write_table(
            output_dir / "fig5_largest_subareas.csv",
            ["year", "area", "area_ratio", "largest_subarea", "subarea_ratio"],
            fig5_rows,
        )
    )

    hist_rows = historical_topics_table(model, tags, assignments, top_n=top_n)
    written.append(
        write_table(
            output_dir / "table5_historical_topics.csv",
            ["topic_id", "area", "subareas", "top_words", "n_docs"],
            hist_rows,
        )
    )

    try:
        trend_rows, result, hist = trend_tables(
            assignments, tags, years, from_year=from_year
        )
    except (InsufficientData, DegenerateX, DataError) as exc:
        logger.warning("skipping trend output: %s", exc)
    else:
        written.append(
            write_table(
                output_dir / "fig6_trend.csv",
                ["year", "ratio", "fitted", "ci_lower", "ci_upper"],
                trend_rows,
            )
        )
        trend_payload = result.to_dict()
        trend_payload["overall_historical_ratio"] = hist.overall_ratio
        trend_payload["from_year"] = from_year
        write_json(output_dir / "trend.json", trend_payload)
        written.append(output_dir / "trend.json")
    return written
