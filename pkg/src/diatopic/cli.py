"""Command-line pipeline: ingest -> train/grid -> assign -> report -> trend.

The CLI is a thin shell: every number in its outputs comes from a library
call, stage outputs land in one directory per stage under the output
root, and each stage appends a provenance record to its manifest. Exit
codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import warnings
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .assignment import TopicTags, assign_documents, load_tags
from .config import PipelineConfig
from .corpus import TimeSlicedCorpus, build_time_slices
from .dictionaries import DictionaryBundle
from .dtm import fit_dtm
from .errors import DataError, DiatopicError, EmptyCorpus, NonConvergenceWarning, NumericalError
from .manifest import RunManifest, StageTimer, write_json
from .model import FittedModel
from .preprocess import clean_document_report, load_raw_documents
from .reporting import emit_report, write_table
from .selection import rank_models, run_grid, write_grid_report
from .trend import ols_fit

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract says 1
        raise UsageError(message)


@contextmanager
def _locked(output_dir):
    """One command at a time per output directory."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    lock = output_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise DataError(
            f"output directory is locked by another run: {lock} "
            "(remove the file if that run is gone)"
        ) from None
    try:
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def build_parser():
    parser = _Parser(prog="diatopic", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--output", help="output root (overrides config)")
    common.add_argument("--seed", type=int, help="model seed (overrides config)")
    common.add_argument("--workers", type=int, help="worker pool width")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="clean and slice the corpus")
    train = sub.add_parser("train", parents=[common], help="fit one model")
    train.add_argument("--k", type=int, help="topic count (overrides config)")
    grid = sub.add_parser("grid", parents=[common], help="sweep the topic-count grid")
    grid.add_argument(
        "--k-range",
        nargs=3,
        type=int,
        metavar=("MIN", "MAX", "STEP"),
        dest="k_range",
        help="topic counts MIN..MAX inclusive in steps of STEP",
    )
    grid.add_argument(
        "--seeds", help="comma-separated sweep seeds (e.g. 0,1,2)"
    )
    grid.add_argument(
        "--holdout", type=float, help="held-out document fraction for perplexity"
    )
    assign = sub.add_parser("assign", parents=[common], help="attach documents to topics")
    assign.add_argument("--mass", type=float, help="assignment mass fraction")
    report = sub.add_parser("report", parents=[common], help="emit tables and plot data")
    trend = sub.add_parser("trend", parents=[common], help="trend-test a (year, ratio) series")
    trend.add_argument("--input", help="CSV of year,ratio rows (default: report output)")
    trend.add_argument("--from-year", type=int, dest="from_year")
    return parser


def _load_config(args):
    overrides = {}
    if args.output:
        overrides.setdefault("paths", {})["output_dir"] = args.output
    if args.seed is not None:
        overrides.setdefault("model", {})["seed"] = args.seed
    if args.workers is not None:
        overrides.setdefault("run", {})["workers"] = args.workers
    if getattr(args, "k", None) is not None:
        overrides.setdefault("model", {})["n_topics"] = args.k
    if getattr(args, "mass", None) is not None:
        overrides.setdefault("analysis", {})["assignment_mass"] = args.mass
    if getattr(args, "from_year", None) is not None:
        overrides.setdefault("analysis", {})["from_year"] = args.from_year
    return PipelineConfig.load(args.config, overrides)


def main(argv=None):
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        config = _load_config(args)
        handler = {
            "ingest": cmd_ingest,
            "train": cmd_train,
            "grid": cmd_grid,
            "assign": cmd_assign,
            "report": cmd_report,
            "trend": cmd_trend,
        }[args.command]
        with _locked(config.output_dir()):
            handler(args, config)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, DiatopicError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _manifest(config, command, inputs, timer):
    record = RunManifest.collect(
        command=command,
        config=config.snapshot(),
        input_paths=inputs,
        seed=int(config.model["seed"]),
    )
    record.timings = timer.timings
    return record


# -- ingest ----------------------------------------------------------------


def cmd_ingest(args, config):
    timer = StageTimer()
    timer.start("load")
    corpus_dir = config.require_path(config.paths["corpus_dir"], "corpus directory")
    metadata = config.paths["metadata"] or corpus_dir / "metadata.json"
    config.require_path(metadata, "metadata file")
    freq_path = config.require_path(
        config.paths["frequency_dict"], "frequency dictionary"
    )
    opt = lambda key: config.paths[key] or None
    bundle = DictionaryBundle.from_paths(
        frequency_path=freq_path,
        custom_path=opt("custom_dict"),
        lemma_path=opt("lemma_table"),
        stopword_paths=[p for p in config.paths["stopwords"] if p],
        protected_path=opt("protected"),
        min_token_len=int(config.ingest["min_token_len"]),
    )
    raw = load_raw_documents(
        corpus_dir,
        metadata_path=metadata,
        year_range=(int(config.ingest["year_min"]), int(config.ingest["year_max"])),
    )
    if not raw:
        raise EmptyCorpus(f"no .txt/.html documents under {corpus_dir}")
    timer.stop("load")

    timer.start("clean")
    languages = [str(x).lower() for x in config.ingest["languages"]]
    cleaned = []
    reports = []
    for doc in raw:
        clean, report = clean_document_report(
            doc,
            bundle,
            min_len=int(config.ingest["min_token_len"]),
            max_edit_distance=int(config.ingest["max_edit_distance"]),
        )
        modeled = not languages or doc.language in languages
        cleaned.append((clean, modeled))
        reports.append((report, modeled))
    modeled_docs = [c for c, m in cleaned if m]
    if not modeled_docs:
        raise EmptyCorpus(
            f"no documents left after the language filter {languages}"
        )
    timer.stop("clean")

    timer.start("slice")
    corpus = build_time_slices(
        modeled_docs,
        bin_years=int(config.ingest["bin_years"]),
        min_df=int(config.ingest["min_df"]),
    )
    timer.stop("slice")

    timer.start("write")
    out = config.ingest_dir()
    out.mkdir(parents=True, exist_ok=True)
    corpus.save(config.corpus_archive())

    modeled_reports = [r for r, m in reports if m]
    total_words = sum(r.words for r in modeled_reports)
    corrected_types = set()
    word_types = set()
    for (clean, m), (report, _) in zip(cleaned, reports):
        if m:
            corrected_types |= report.corrected_types
            word_types.update(clean.tokens)
    rec_before = (
        sum(r.recognition_before * r.words for r in modeled_reports) / total_words
        if total_words
        else 1.0
    )
    rec_after = (
        sum(r.recognition_after * r.words for r in modeled_reports) / total_words
        if total_words
        else 1.0
    )
    by_language = {}
    for r, _ in reports:
        by_language[r.language] = by_language.get(r.language, 0) + 1
    summary = {
        "number_of_documents": len(modeled_reports),
        "documents_ingested": len(raw),
        "documents_in_slices": corpus.n_docs,
        "documents_by_language": by_language,
        "number_of_words": total_words,
        "number_of_unique_words": len(word_types),
        "number_of_corrected_words": len(corrected_types),
        "corrected_occurrences": sum(r.corrected_occurrences for r in modeled_reports),
        "average_document_length": (
            sum(r.usable_words for r in modeled_reports) / len(modeled_reports)
        ),
        "number_of_stopwords": len(bundle.effective_stopwords),
        "protected_words": len(bundle.protected),
        "recognition_before": rec_before,
        "recognition_after": rec_after,
        "dropped_periods": corpus.slice_rule["dropped_periods"],
        "empty_doc_ids": corpus.slice_rule["empty_doc_ids"],
    }
    write_json(out / "ingest_report.json", summary)
    write_table(
        out / "recognition.csv",
        ["doc_id", "year", "words", "recognition_before", "recognition_after"],
        [
            (r.id, r.year, r.words, r.recognition_before, r.recognition_after)
            for r, m in reports
            if m
        ],
    )
    write_table(
        out / "years.csv",
        ["doc_id", "year", "language", "usable_words", "modeled"],
        [
            (r.id, r.year, r.language, r.usable_words, str(m).lower())
            for r, m in reports
        ],
    )
    timer.stop("write")
    inputs = [corpus_dir, metadata, freq_path] + [
        p for p in [opt("custom_dict"), opt("lemma_table"), opt("protected")] if p
    ] + [p for p in config.paths["stopwords"] if p]
    _manifest(config, "ingest", inputs, timer).append_to(out)
    print(f"ingested {summary['number_of_documents']} documents "
          f"({corpus.n_slices} slices, {corpus.vocab_size} tokens) -> {out}")


# -- modelling ---------------------------------------------------------------


def _load_corpus(config):
    archive = config.corpus_archive()
    if not archive.exists():
        raise DataError(
            f"corpus archive not found: {archive} (run 'diatopic ingest' first)"
        )
    return TimeSlicedCorpus.load(archive)


def cmd_train(args, config):
    timer = StageTimer()
    corpus = _load_corpus(config)
    hyper = config.hyperparams()
    timer.start("fit")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergenceWarning)
        model = fit_dtm(corpus, hyper, **config.fit_options())
    timer.stop("fit")
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    model_dir = config.model_dir()
    model.save(model_dir)
    _manifest(config, "train", [config.corpus_archive()], timer).append_to(model_dir)
    print(
        f"fitted K={hyper.n_topics} seed={hyper.seed} in "
        f"{model.train_log['iterations']} iterations "
        f"(converged={model.train_log['converged']}) -> {model_dir}"
    )


def cmd_grid(args, config):
    timer = StageTimer()
    corpus = _load_corpus(config)
    grid = config.grid_spec()
    timer.start("sweep")
    rows = run_grid(
        corpus,
        grid,
        config.hyperparams(),
        workers=int(config.run["workers"]),
        fit_options=config.fit_options(),
    )
    timer.stop("sweep")
    report = rank_models(rows)
    out = config.output_dir() / "grid"
    write_grid_report(rows, report, out)
    _manifest(config, "grid", [config.corpus_archive()], timer).append_to(out)
    failed = sum(1 for r in rows if r.failed)
    print(f"grid sweep: {len(rows)} cells ({failed} failed) -> {out}")


def _load_model(config):
    model_dir = config.model_dir()
    if not (model_dir / "model.json").exists():
        raise DataError(
            f"model archive not found: {model_dir} (run 'diatopic train' first)"
        )
    return FittedModel.load(model_dir)


def cmd_assign(args, config):
    timer = StageTimer()
    model = _load_model(config)
    mass = float(config.analysis["assignment_mass"])
    timer.start("assign")
    assignments = [
        assign_documents(model, k, mass=mass) for k in range(model.n_topics)
    ]
    timer.stop("assign")
    out = config.output_dir() / "assign"
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    assigned = set()
    for a in assignments:
        for rank, (doc_id, prop) in enumerate(a.docs, start=1):
            rows.append((a.topic_id, rank, doc_id, prop))
            assigned.add(doc_id)
    write_table(
        out / "assignments.csv", ["topic_id", "rank", "doc_id", "proportion"], rows
    )
    unassigned = sorted(set(model.doc_ids) - assigned)
    write_json(
        out / "assignments.json",
        {
            "mass": mass,
            "topics": [
                {
                    "topic_id": a.topic_id,
                    "mass_covered": a.mass_covered,
                    "n_docs": len(a.docs),
                    "docs": [
                        {"doc_id": d, "proportion": p} for d, p in a.docs
                    ],
                }
                for a in assignments
            ],
            "unassigned_doc_ids": unassigned,
        },
    )
    _manifest(config, "assign", [config.model_dir()], timer).append_to(out)
    print(
        f"assigned documents to {len(assignments)} topics at mass {mass} "
        f"({len(unassigned)} documents without topic) -> {out}"
    )


# -- reporting ----------------------------------------------------------------


def _read_years_table(config):
    path = config.ingest_dir() / "years.csv"
    if not path.exists():
        raise DataError(
            f"years table not found: {path} (run 'diatopic ingest' first)"
        )
    years = {}
    lengths = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["modeled"] != "true":
                continue
            doc_id = row["doc_id"]
            years[doc_id] = int(row["year"])
            lengths.append((doc_id, int(row["year"]), float(row["usable_words"])))
    return years, lengths


def cmd_report(args, config):
    timer = StageTimer()
    model = _load_model(config)
    tags_path = config.paths["tags_file"]
    if tags_path and Path(tags_path).exists():
        tags = load_tags(tags_path, num_topics=model.n_topics)
    else:
        print(
            "warning: no tags file configured or found; "
            "labelling every topic as Other",
            file=sys.stderr,
        )
        tags = [
            TopicTags(topic_id=k, main_area="Other")
            for k in range(model.n_topics)
        ]
    years, lengths = _read_years_table(config)
    mass = float(config.analysis["assignment_mass"])
    timer.start("report")
    assignments = [
        assign_documents(model, k, mass=mass) for k in range(model.n_topics)
    ]
    out = config.output_dir() / "reports"
    from_year = int(config.analysis["from_year"]) or None
    emit_report(
        out,
        model,
        tags,
        years,
        lengths,
        assignments,
        from_year=from_year,
        report_bin_years=int(config.analysis["report_bin_years"]),
        top_n=int(config.analysis["top_n_words"]),
    )
    timer.stop("report")
    inputs = [config.model_dir(), config.ingest_dir() / "years.csv"]
    if tags_path and Path(tags_path).exists():
        inputs.append(tags_path)
    _manifest(config, "report", inputs, timer).append_to(out)
    print(f"report tables -> {out}")


def cmd_trend(args, config):
    timer = StageTimer()
    if args.input:
        series_path = Path(args.input)
    else:
        series_path = config.output_dir() / "reports" / "fig6_trend.csv"
    if not series_path.exists():
        raise DataError(f"trend input not found: {series_path}")
    xs, ys = [], []
    with open(series_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or row[0].strip().lower() in ("year",):
                continue
            xs.append(float(row[0]))
            ys.append(float(row[1]))
    from_year = int(config.analysis["from_year"]) or None
    if from_year is not None:
        pairs = [(x, y) for x, y in zip(xs, ys) if x >= from_year]
        xs = [x for x, _ in pairs]
        ys = [y for _, y in pairs]
    timer.start("fit")
    result = ols_fit(xs, ys)
    timer.stop("fit")
    out = config.output_dir() / "trend"
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "trend.json", result.to_dict())
    write_table(
        out / "fig6_trend.csv",
        ["year", "ratio", "fitted", "ci_lower", "ci_upper"],
        [
            (int(x), y, f, lo, hi)
            for x, y, f, lo, hi in zip(
                result.x, ys, result.fitted, result.ci_lower, result.ci_upper
            )
        ],
    )
    _manifest(config, "trend", [series_path], timer).append_to(out)
    print(
        f"trend: slope={result.slope:.6f} r={result.r:.4f} "
        f"p(one-sided, r<0)={result.p_one_sided_less:.4f} -> {out}"
    )


if __name__ == "__main__":
    sys.exit(main())
