"""Cleaning pipeline stages against independent oracles and paper cases."""

import re

import numpy as np
import pytest

from diatopic.dictionaries import DictionaryBundle
from diatopic.errors import EmptyDictionary, ParseError
from diatopic.preprocess import (
    RawDocument,
    clean_document,
    clean_document_report,
    correct_orthography,
    lemmatize,
    load_raw_documents,
    normalize_and_tokenize,
    recognition_ratio,
    remove_stopwords,
    strip_markup,
)

# -- strip_markup ------------------------------------------------------------


def reference_strip(markup):
    """Independent markup-to-text: regex removal, then whitespace collapse."""
    text = re.sub(r"(?is)<(script|style)\b.*?>.*?</\1\s*>", " ", markup)
    text = re.sub(r"<[^>]*>", " ", text)
    text = text.replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">")
    return " ".join(text.split())


GOLDEN_MARKUP = [
    "<p>Kant y la <b>razón</b></p>",
    "",
    "<div>a<script>x()</script>b</div>",
    "<html><body><h1>Título</h1><p>Un párrafo.</p></body></html>",
    "sin etiquetas",
    "<p>multi\n  línea\n</p>",
    "<ul><li>uno</li><li>dos</li></ul>",
    "<style>p { color: red }</style><p>visible</p>",
    "<p>entidad &amp; texto</p>",
    "<p>a &lt;raw&gt; b</p>",
    "<div><div><div>anidado</div></div></div>",
    "<p>roto <b>sin cierre",
    "texto <br/> con salto",
    "<script>solo()</script>",
    "<p>  espacios   múltiples  </p>",
    "<a href='x'>enlace</a> y cola",
    "<P>MAYÚSCULAS</P>",
    "<p>acentos: razón, lógica, filosofía</p>",
    "uno<p>dos</p>tres",
    "<td>celda</td><td>otra</td>",
]


def test_strip_markup_trivial_cases():
    assert strip_markup("<p>Kant y la <b>razón</b></p>") == "Kant y la razón"
    assert strip_markup("") == ""
    assert strip_markup("<div>a<script>x()</script>b</div>") == "a b"


def test_strip_markup_against_reference_on_golden_file():
    for case in GOLDEN_MARKUP:
        assert strip_markup(case) == reference_strip(case), case


# -- normalize_and_tokenize ----------------------------------------------------


def test_tokenize_drops_short_and_punct():
    assert normalize_and_tokenize("La razón, ¡pura!") == ["razón", "pura"]


def test_tokenize_drops_numerals_and_roman_shorts():
    assert normalize_and_tokenize("IV. §2 1984") == []


def test_tokenize_against_hand_enumerated_oracle():
    text = (
        "¿Qué es la Ilustración? Kant (1784) responde: ¡sapere aude! "
        "Ver pp. 35-49; cf. tomo II, añadido-final..."
    )
    assert len(text) > 100
    expected = [
        "qué", "ilustración", "kant", "responde", "sapere", "aude",
        "ver", "tomo", "añadido", "final",
    ]
    assert normalize_and_tokenize(text) == expected


def test_tokenize_min_len_is_configurable():
    assert normalize_and_tokenize("a bb ccc dddd", min_len=2) == ["bb", "ccc", "dddd"]


def test_tokenize_preserves_accents():
    assert normalize_and_tokenize("Razón y fenómeno") == ["razón", "fenómeno"]


# -- correct_orthography ---------------------------------------------------------


def test_correction_fixes_ocr_m_artifact(bundle):
    # the classic OCR confusion: "M" read as the sequence "lVl";
    # lVl -> m is 3 edits away, hence the widened radius
    dicts = DictionaryBundle(
        frequency_dict={"m": 500, "mundo": 900},
        stopwords=set(),
    )
    tokens, n = correct_orthography(["lVl", "mundo"], dicts, max_edit_distance=3)
    assert tokens == ["m", "mundo"]
    assert n == 1


def test_correction_leaves_recognized_tokens_alone(bundle):
    tokens, n = correct_orthography(["mundo", "razón"], bundle)
    assert tokens == ["mundo", "razón"]
    assert n == 0


def test_correction_restores_accent_by_frequency(bundle):
    # brute-force oracle: all lexicon words within distance 2, max frequency
    from diatopic.spelling import levenshtein

    lexicon = {**bundle.frequency_dict}
    candidates = [
        (w, f) for w, f in lexicon.items() if levenshtein("filosofia", w) <= 2
    ]
    want = min(candidates, key=lambda wf: (-wf[1], wf[0]))[0]
    assert want == "filosofía"
    tokens, n = correct_orthography(["filosofia"], bundle)
    assert tokens == ["filosofía"]
    assert n == 1


def test_correction_keeps_unknown_without_candidates(bundle):
    tokens, n = correct_orthography(["zzzzqqqq"], bundle)
    assert tokens == ["zzzzqqqq"]
    assert n == 0


def test_correction_requires_frequency_dict():
    dicts = DictionaryBundle(frequency_dict={})
    with pytest.raises(EmptyDictionary):
        correct_orthography(["palabra"], dicts)


# -- recognition_ratio ---------------------------------------------------------


def test_recognition_ratio_trivials(bundle):
    assert recognition_ratio([], bundle) == 1.0
    assert recognition_ratio(["mundo", "razón"], bundle) == 1.0
    assert recognition_ratio(["mundo", "razón", "idea", "xqzw"], bundle) == 0.75


def test_recognition_counts_custom_and_protected(bundle):
    assert recognition_ratio(["fenomenología"], bundle) == 1.0
    assert recognition_ratio(["bien"], bundle) == 1.0


# -- remove_stopwords ------------------------------------------------------------


def test_protected_words_survive_stopword_removal():
    dicts = DictionaryBundle(
        frequency_dict={"x": 1},
        stopwords={"el", "de", "bien", "verdad"},
        protected={"bien", "verdad"},
    )
    assert remove_stopwords(["el", "bien", "de", "verdad"], dicts) == ["bien", "verdad"]


def test_remove_stopwords_empty():
    assert remove_stopwords([], DictionaryBundle(frequency_dict={"x": 1})) == []


def test_remove_stopwords_matches_set_difference_oracle(bundle):
    rng = np.random.default_rng(5)
    pool = list(bundle.frequency_dict) + list(bundle.stopwords) + ["ajeno"]
    tokens = [pool[rng.integers(len(pool))] for _ in range(50)]
    stop = bundle.stopwords - bundle.protected
    want = [t for t in tokens if t not in stop]
    assert remove_stopwords(tokens, bundle) == want


# -- lemmatize -------------------------------------------------------------------


def test_lemmatize_table_lookup(bundle):
    assert lemmatize(["juegos"], bundle) == ["juego"]
    assert lemmatize(["mundo"], bundle) == ["mundo"]


def test_lemmatize_matches_map_oracle(bundle):
    rng = np.random.default_rng(2)
    pool = ["juegos", "ideas", "mundo", "razón", "historia"]
    tokens = [pool[rng.integers(len(pool))] for _ in range(30)]
    want = [bundle.lemma_table.get(t, t) for t in tokens]
    assert lemmatize(tokens, bundle) == want


# -- pipeline invariants -----------------------------------------------------------


def token_stage_pipeline(tokens, dicts):
    out, _ = correct_orthography(tokens, dicts)
    return lemmatize(remove_stopwords(out, dicts), dicts)


def test_pipeline_idempotent_from_second_stage(bundle):
    rng = np.random.default_rng(9)
    pool = (
        list(bundle.frequency_dict)
        + list(bundle.stopwords)
        + ["filosofia", "xqzw", "juegos", "ideas"]
    )
    for _ in range(50):
        tokens = [pool[rng.integers(len(pool))] for _ in range(rng.integers(0, 30))]
        once = token_stage_pipeline(tokens, bundle)
        twice = token_stage_pipeline(once, bundle)
        assert once == twice


def test_correction_never_lowers_recognition(bundle):
    rng = np.random.default_rng(11)
    pool = list(bundle.frequency_dict) + ["filosofia", "mundoz", "xqzw", "razon"]
    for _ in range(100):
        tokens = [pool[rng.integers(len(pool))] for _ in range(rng.integers(0, 25))]
        before = recognition_ratio(tokens, bundle)
        corrected, _ = correct_orthography(tokens, bundle)
        assert recognition_ratio(corrected, bundle) >= before - 1e-12


def test_clean_document_counts_and_order(bundle):
    raw = RawDocument(
        id="d1",
        year=1980,
        source_kind="markup",
        text="<p>Los juegos de la filosofia, el mundo y la verdad</p>",
    )
    doc, report = clean_document_report(raw, bundle)
    # "los", "de", "el", "la" are stopwords; "verdad" protected; accents restored
    assert doc.tokens == ["juego", "filosofía", "mundo", "verdad"]
    assert doc.corrected_count == 1
    assert report.words == 5  # los juegos filosofia mundo verdad (length >= 3 only)
    assert report.usable_words == 4
    assert report.corrected_types == frozenset({"filosofia"})
    assert report.recognition_after >= report.recognition_before


def test_clean_document_plain_equals_markupless(bundle):
    raw = RawDocument(id="d", year=2000, text="mundo razón")
    assert clean_document(raw, bundle).tokens == ["mundo", "razón"]


# -- load_raw_documents -------------------------------------------------------------


def test_load_raw_documents_roundtrip(tmp_path):
    (tmp_path / "a.txt").write_text("hola mundo", encoding="utf-8")
    (tmp_path / "b.html").write_text("<p>texto</p>", encoding="utf-8")
    (tmp_path / "metadata.json").write_text(
        '{"a": {"year": 1999, "language": "spanish"}, "b": {"year": 2001}}',
        encoding="utf-8",
    )
    docs = load_raw_documents(tmp_path)
    assert [d.id for d in docs] == ["a", "b"]
    assert docs[0].language == "spanish"
    assert docs[1].language == "unknown"
    assert docs[1].source_kind == "markup"


def test_load_raw_documents_validates_year(tmp_path):
    (tmp_path / "a.txt").write_text("x", encoding="utf-8")
    (tmp_path / "metadata.json").write_text('{"a": {"year": 1500}}', encoding="utf-8")
    with pytest.raises(ParseError):
        load_raw_documents(tmp_path)


def test_load_raw_documents_requires_metadata(tmp_path):
    (tmp_path / "a.txt").write_text("x", encoding="utf-8")
    (tmp_path / "metadata.json").write_text("{}", encoding="utf-8")
    with pytest.raises(ParseError):
        load_raw_documents(tmp_path)
