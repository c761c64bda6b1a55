"""Topic-count selection: grid sweep, metrics table, weighted ranking.

The sweep fits one model per (n_topics, seed) cell on a shared train
split, scores every cell with four metrics (coherence up; perplexity,
empty topics and unassigned documents down) and emits a ranked report.
Ranking is an aid for human review, never an automatic selection.
"""

from __future__ import annotations

import csv
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .assignment import assign_documents
from .dtm import fit_dtm
from .errors import DataError, NonConvergenceWarning
from .manifest import write_json
from .metrics import log_perplexity, topic_coherence
from .validation import as_rng

__all__ = [
    "GridSpec",
    "GridCellMetrics",
    "RankedReport",
    "split_heldout",
    "run_grid",
    "rank_models",
    "write_grid_report",
]

logger = logging.getLogger(__name__)

DEFAULT_K_VALUES = tuple(range(50, 151, 10))
METRIC_NAMES = ("coherence", "perplexity", "empty_topics", "unassigned_docs")
# coherence is maximized, everything else minimized
METRIC_SIGNS = {"coherence": 1.0, "perplexity": -1.0, "empty_topics": -1.0, "unassigned_docs": -1.0}


@dataclass
class GridSpec:
    """Sweep definition: topic counts, seeds, holdout and assignment knobs."""

    k_values: tuple = DEFAULT_K_VALUES
    seeds: tuple = (0, 1, 2)
    heldout_fraction: float = 0.1
    assignment_mass: float = 0.5

    def __post_init__(self):
        self.k_values = tuple(int(k) for k in self.k_values)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.k_values or any(k < 2 for k in self.k_values):
            raise DataError("k_values must be non-empty with all values >= 2")
        if not self.seeds:
            raise DataError("seeds must be non-empty")
        if not 0.0 < self.heldout_fraction < 1.0:
            raise DataError("heldout_fraction must be in (0, 1)")
        if not 0.0 < self.assignment_mass <= 1.0:
            raise DataError("assignment_mass must be in (0, 1]")


@dataclass
class GridCellMetrics:
    """Metrics of one (n_topics, seed) cell; ``failed`` flags broken cells."""

    K: int
    seed: int
    coherence: float = float("nan")
    perplexity: float = float("nan")
    empty_topics: int = -1
    unassigned_docs: int = -1
    wall_time: float = 0.0
    converged: bool = False
    failed: bool = False
    error: str = ""

    def to_dict(self):
        return {
            "K": self.K,
            "seed": self.seed,
            "coherence": self.coherence,
            "perplexity": self.perplexity,
            "empty_topics": self.empty_topics,
            "unassigned_docs": self.unassigned_docs,
            "wall_time": self.wall_time,
            "converged": self.converged,
            "failed": self.failed,
            "error": self.error,
        }


def split_heldout(corpus, fraction, seed):
    """Stratified-by-slice document holdout; returns (train, heldout).

    Every slice keeps at least one training document; tiny slices may
    contribute nothing to the holdout. The same ``seed`` reproduces the
    same split, which is what makes perplexities comparable across cells.
    """
    rng = as_rng(seed)
    held = []
    for s in corpus.slices:
        n_held = min(int(round(fraction * s.n_docs)), s.n_docs - 1)
        if n_held <= 0:
            continue
        perm = rng.permutation(s.n_docs)
        held.extend(s.doc_ids[i] for i in perm[:n_held])
    held_set = set(held)
    train_ids = [d for d in corpus.doc_ids() if d not in held_set]
    train = corpus.subset_by_ids(train_ids)
    heldout = corpus.subset_by_ids(held)
    return train, heldout


def _run_cell(args):
    corpus, train, heldout, hyper, mass, fit_options = args
    row = GridCellMetrics(K=hyper.n_topics, seed=hyper.seed)
    started = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergenceWarning)
            model = fit_dtm(train, hyper, **fit_options)
        row.converged = bool(model.train_log.get("converged", False))
        # document frequencies for coherence come from the full corpus
        row.coherence = float(topic_coherence(model, corpus).average)
        if heldout.n_docs:
            row.perplexity = float(log_perplexity(model, heldout))
        assigned = set()
        empty = 0
        for k in range(model.n_topics):
            a = assign_documents(model, k, mass=mass)
            if not a.docs:
                empty += 1
            assigned.update(doc_id for doc_id, _ in a.docs)
        row.empty_topics = empty
        row.unassigned_docs = model.n_docs - len(assigned)
    except Exception as exc:  # a broken cell must not sink the sweep
        logger.exception("grid cell K=%d seed=%d failed", hyper.n_topics, hyper.seed)
        row.failed = True
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time = time.perf_counter() - started
    return row


def run_grid(corpus, grid, hyper_base, workers=1, fit_options=None):
    """Fit every (n_topics, seed) cell and return one metrics row per cell.

    The holdout split is derived once from ``hyper_base.seed`` and shared
    by all cells. Failed cells are recorded inline, never raised.
    """
    fit_options = dict(fit_options or {})
    train, heldout = split_heldout(
        corpus, grid.heldout_fraction, seed=hyper_base.seed
    )
    logger.info(
        "grid sweep: %d cells, %d train docs, %d held-out docs",
        len(grid.k_values) * len(grid.seeds),
        train.n_docs,
        heldout.n_docs,
    )
    jobs = [
        (corpus, train, heldout, replace(hyper_base, n_topics=k, seed=s),
         grid.assignment_mass, fit_options)
        for k in grid.k_values
        for s in grid.seeds
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(job) for job in jobs]
    return rows


@dataclass
class RankedReport:
    """Sorted cells with their composite scores; raw rows echoed."""

    entries: list  # (score, GridCellMetrics), best first; failed rows last
    weights: dict
    coherence_variant: str = "umass-document-cooccurrence"
    holdout_protocol: str = "stratified-by-slice document holdout"

    def to_dict(self):
        return {
            "weights": self.weights,
            "coherence_variant": self.coherence_variant,
            "holdout_protocol": self.holdout_protocol,
            "ranking": [
                {"score": score, **row.to_dict()} for score, row in self.entries
            ],
        }


def rank_models(rows, weights=None):
    """Order grid rows by weighted z-scored metrics.

    Coherence contributes positively, the other three negatively. The
    result is invariant to the input order of ``rows``; failed cells sink
    to the bottom with a NaN score. The weights and raw rows travel with
    the report so a human can override the ordering.
    """
    if not rows:
        raise DataError("rank_models needs at least one row")
    weights = {name: 1.0 for name in METRIC_NAMES} | dict(weights or {})
    ok = [r for r in rows if not r.failed]
    zscores = {}
    for name in METRIC_NAMES:
        values = np.array([float(getattr(r, name)) for r in ok], dtype=float)
        finite = values[np.isfinite(values)]
        if len(finite) and finite.std() > 0:
            z = (values - finite.mean()) / finite.std()
        else:
            z = np.zeros_like(values)
        z[~np.isfinite(z)] = 0.0
        zscores[name] = z
    scored = []
    for i, row in enumerate(ok):
        score = sum(
            weights[name] * METRIC_SIGNS[name] * zscores[name][i]
            for name in METRIC_NAMES
        )
        scored.append((float(score), row))
    scored.sort(key=lambda sr: (-sr[0], sr[1].K, sr[1].seed))
    failed = sorted(
        ((float("nan"), r) for r in rows if r.failed),
        key=lambda sr: (sr[1].K, sr[1].seed),
    )
    return RankedReport(entries=scored + failed, weights=weights)


def write_grid_report(rows, report, output_dir):
    """Emit the per-cell CSV plus the JSON report with full metadata."""
    from pathlib import Path

    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = output_dir / "grid_metrics.csv"
    fields = [
        "K", "seed", "coherence", "perplexity", "empty_topics",
        "unassigned_docs", "wall_time", "converged", "failed", "error",
    ]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            record = row.to_dict()
            record["wall_time"] = f"{row.wall_time:.3f}"
            writer.writerow(record)
    write_json(output_dir / "grid_report.json", report.to_dict())
    return csv_path
