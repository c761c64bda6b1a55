"""Document cleaning: markup stripping, tokenization, correction, filtering.

The pipeline order is fixed: strip markup (markup sources only), then
normalize/tokenize, then orthographic correction, then stopword removal,
then lemmatization. Applied to its own output, the token-level portion of
the pipeline is a no-op; :mod:`diatopic.dictionaries` sanitizes the
resources at load time to guarantee that.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path

from .errors import ParseError
from .spelling import get_corrector

__all__ = [
    "LANGUAGES",
    "RawDocument",
    "CleanDocument",
    "strip_markup",
    "normalize_and_tokenize",
    "correct_orthography",
    "recognition_ratio",
    "remove_stopwords",
    "lemmatize",
    "clean_document",
    "clean_document_report",
    "load_raw_documents",
]

logger = logging.getLogger(__name__)

LANGUAGES = ("spanish", "english", "portuguese", "unknown")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass
class RawDocument:
    """One input document before any cleaning."""

    id: str
    year: int
    language: str = "unknown"
    source_kind: str = "plain"  # "plain" or "markup"
    text: str = ""
    metadata: dict = field(default_factory=dict)


@dataclass
class CleanDocument:
    """A normalized bag of tokens with a year stamp."""

    id: str
    year: int
    tokens: list
    corrected_count: int = 0


@dataclass
class DocumentReport:
    """Per-document cleaning statistics kept for the ingest report."""

    id: str
    year: int
    language: str
    words: int  # tokens surviving normalization (pre-stopword)
    usable_words: int  # tokens surviving the full pipeline
    recognition_before: float
    recognition_after: float
    corrected_occurrences: int
    corrected_types: frozenset


class _TextExtractor(HTMLParser):
    """Collects visible text, skipping script/style subtrees."""

    _SKIP = frozenset({"script", "style"})

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self._skip_depth = 0
        self.chunks = []

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1

    def handle_data(self, data):
        if not self._skip_depth:
            self.chunks.append(data)


def strip_markup(text):
    """Return the visible text of an HTML/XML fragment.

    Script and style content is dropped, tag boundaries become spaces and
    whitespace is collapsed. Malformed markup is tolerated; at worst the
    tags are removed best-effort.
    """
    extractor = _TextExtractor()
    extractor.feed(text)
    extractor.close()
    return " ".join(" ".join(extractor.chunks).split())


def normalize_and_tokenize(text, min_len=3):
    """Lowercase and split plain text into filtered tokens.

    Punctuation is discarded, accents are preserved (they are meaningful in
    Spanish), digit-only tokens and tokens shorter than ``min_len`` are
    removed.
    """
    text = unicodedata.normalize("NFC", text).lower()
    return [
        tok
        for tok in _TOKEN_RE.findall(text)
        if len(tok) >= min_len and not tok.isdigit()
    ]


def correct_orthography(tokens, dicts, max_edit_distance=2):
    """Replace unrecognized tokens by their best lexicon candidate.

    A token already in the recognition lexicon is never touched. An
    unknown token is replaced by the highest-frequency lexicon word within
    ``max_edit_distance`` edits (ties broken lexicographically) or kept
    unchanged when no candidate exists.

    Returns
    -------
    (list of str, int)
        The corrected token list and the number of replaced occurrences.

    Raises
    ------
    EmptyDictionary
        If the bundle's frequency lexicon is empty.
    """
    corrector = get_corrector(dicts, max_edit_distance)
    replacements = {}
    out = []
    corrected = 0
    for token in tokens:
        if dicts.recognizes(token):
            out.append(token)
            continue
        if token not in replacements:
            replacements[token] = corrector.best_replacement(token)
        best = replacements[token]
        if best is None or best == token:
            out.append(token)
        else:
            out.append(best)
            corrected += 1
    return out, corrected


def recognition_ratio(tokens, dicts):
    """Fraction of token occurrences found in the recognition lexicon.

    An empty token list counts as fully recognized (1.0).
    """
    if not tokens:
        return 1.0
    hits = sum(1 for t in tokens if dicts.recognizes(t))
    return hits / len(tokens)


def remove_stopwords(tokens, dicts):
    """Drop effective stopwords (stopword list minus protected words)."""
    stop = dicts.effective_stopwords
    return [t for t in tokens if t not in stop]


def lemmatize(tokens, dicts):
    """Replace each token by its lemma when the table has one."""
    table = dicts.lemma_table
    return [table.get(t, t) for t in tokens]


def clean_document(raw, dicts, min_len=3, max_edit_distance=2):
    """Run the full cleaning pipeline on one document."""
    return clean_document_report(raw, dicts, min_len, max_edit_distance)[0]


def clean_document_report(raw, dicts, min_len=3, max_edit_distance=2):
    """Full pipeline plus the per-document statistics the ingest report needs.

    Returns ``(CleanDocument, DocumentReport)``.
    """
    text = strip_markup(raw.text) if raw.source_kind == "markup" else raw.text
    tokens = normalize_and_tokenize(text, min_len=min_len)
    before = recognition_ratio(tokens, dicts)
    corrected, n_corrected = correct_orthography(
        tokens, dicts, max_edit_distance=max_edit_distance
    )
    after = recognition_ratio(corrected, dicts)
    changed_types = frozenset(
        old for old, new in zip(tokens, corrected) if old != new
    )
    kept = remove_stopwords(corrected, dicts)
    lemmas = lemmatize(kept, dicts)
    doc = CleanDocument(
        id=raw.id, year=raw.year, tokens=lemmas, corrected_count=n_corrected
    )
    report = DocumentReport(
        id=raw.id,
        year=raw.year,
        language=raw.language,
        words=len(tokens),
        usable_words=len(lemmas),
        recognition_before=before,
        recognition_after=after,
        corrected_occurrences=n_corrected,
        corrected_types=changed_types,
    )
    return doc, report


def load_raw_documents(corpus_dir, metadata_path=None, year_range=(1900, 2100)):
    """Load a directory of ``.txt``/``.html`` files plus sidecar metadata.

    The metadata file is JSON keyed by document id with at least a
    ``year`` field; ``language`` defaults to ``unknown``. Documents are
    returned sorted by id.

    Raises
    ------
    ParseError
        On missing metadata, duplicate ids, or out-of-range years.
    """
    corpus_dir = Path(corpus_dir)
    if metadata_path is None:
        metadata_path = corpus_dir / "metadata.json"
    try:
        metadata = json.loads(Path(metadata_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"metadata file {metadata_path}: {exc}") from exc
    if not isinstance(metadata, dict):
        raise ParseError(
            f"metadata file {metadata_path}: expected a JSON object keyed by id"
        )

    paths = sorted(
        p
        for p in corpus_dir.iterdir()
        if p.suffix.lower() in {".txt", ".html", ".htm"}
    )
    docs = []
    seen = set()
    lo, hi = year_range
    for path in paths:
        doc_id = path.stem
        if doc_id in seen:
            raise ParseError(f"duplicate document id {doc_id!r}")
        seen.add(doc_id)
        meta = metadata.get(doc_id)
        if meta is None or "year" not in meta:
            raise ParseError(f"no metadata year for document {doc_id!r}")
        year = int(meta["year"])
        if not lo <= year <= hi:
            raise ParseError(
                f"document {doc_id!r} year {year} outside range {lo}-{hi}"
            )
        language = str(meta.get("language", "unknown")).lower()
        if language not in LANGUAGES:
            logger.warning(
                "document %s: unknown language %r, treating as 'unknown'",
                doc_id,
                language,
            )
            language = "unknown"
        docs.append(
            RawDocument(
                id=doc_id,
                year=year,
                language=language,
                source_kind="markup" if path.suffix.lower() != ".txt" else "plain",
                text=path.read_text(encoding="utf-8"),
                metadata={k: v for k, v in meta.items() if k not in ("year",)},
            )
        )
    return docs
