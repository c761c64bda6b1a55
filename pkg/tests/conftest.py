"""Shared fixtures: dictionaries, separable corpora, an on-disk corpus dir."""

import json

import numpy as np
import pytest
import scipy.sparse as sp

from diatopic.corpus import CorpusSlice, TimeSlicedCorpus
from diatopic.dictionaries import DictionaryBundle


@pytest.fixture
def bundle():
    """Small Spanish-flavoured dictionary bundle."""
    return DictionaryBundle(
        frequency_dict={
            "mundo": 900,
            "razón": 800,
            "filosofía": 700,
            "verdad": 600,
            "bien": 500,
            "juego": 400,
            "juegos": 80,
            "historia": 300,
            "idea": 200,
        },
        custom_dict={"fenomenología"},
        lemma_table={"juegos": "juego", "ideas": "idea"},
        stopwords={"el", "de", "la", "los", "bien", "verdad"},
        protected={"bien", "verdad"},
    )


def two_group_counts(V=20, M=200, words_per_doc=40, seed=0):
    """Counts with two disjoint-vocabulary document groups."""
    rng = np.random.default_rng(seed)
    X = np.zeros((M, V))
    for i in range(M):
        base = 0 if i < M // 2 else V // 2
        words = base + rng.integers(0, V // 2, size=words_per_doc)
        for w in words:
            X[i, w] += 1
    return X


def single_slice_corpus(X, label="2000"):
    X = sp.csr_matrix(X)
    vocab = [f"w{j:03d}" for j in range(X.shape[1])]
    ids = [f"d{i:04d}" for i in range(X.shape[0])]
    return TimeSlicedCorpus(vocab, [CorpusSlice(label, ids, X)], {})


@pytest.fixture
def separable_corpus():
    return single_slice_corpus(two_group_counts())


THEMES = {
    "mente": ["mente", "conciencia", "cerebro", "percepción", "memoria",
              "pensamiento", "neurona", "cognición"],
    "ética": ["moral", "deber", "virtud", "justicia", "bondad", "norma",
              "acción", "libertad"],
    "lógica": ["lógica", "proposición", "veracidad", "argumento", "inferencia",
               "premisa", "validez", "falacia"],
}


def write_fixture_corpus(root, n_docs=100, seed=0, languages=("spanish",)):
    """Write a themed on-disk corpus (text files + metadata + dictionaries).

    Returns a dict of the paths a PipelineConfig needs.
    """
    corpus_dir = root / "corpus"
    dict_dir = root / "dicts"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    dict_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = list(THEMES)
    meta = {}
    for i in range(n_docs):
        theme = THEMES[names[i % len(names)]]
        year = 1990 + (i % 8)
        words = [theme[rng.integers(len(theme))] for _ in range(40)]
        words += ["de", "la"]  # stopword fodder
        doc_id = f"doc{i:03d}"
        if i % 10 == 3:
            body = "<html><body><p>" + " ".join(words) + "</p><script>x()</script></body></html>"
            (corpus_dir / f"{doc_id}.html").write_text(body, encoding="utf-8")
        else:
            (corpus_dir / f"{doc_id}.txt").write_text(" ".join(words), encoding="utf-8")
        meta[doc_id] = {
            "year": year,
            "language": languages[i % len(languages)],
            "title": f"Artículo {i}",
            "authors": ["Autora Ejemplo"],
        }
    (corpus_dir / "metadata.json").write_text(json.dumps(meta), encoding="utf-8")

    vocab = sorted({w for ws in THEMES.values() for w in ws})
    (dict_dir / "freq.txt").write_text(
        "\n".join(f"{w} {100 + i}" for i, w in enumerate(vocab)), encoding="utf-8"
    )
    (dict_dir / "stop.txt").write_text("el\nla\nde\nlos\n", encoding="utf-8")
    (dict_dir / "protected.txt").write_text("verdad\n", encoding="utf-8")
    tags = root / "tags.tsv"
    tags.write_text(
        "topic_id\tmain_area\tsubareas\thistorical\n"
        "0\tValueTheory\tEthics\tfalse\n"
        "1\tMetaphysicsEpistemology\tPhilosophy of Mind; #historical\ttrue\n"
        "2\tScienceLogicMath\tLogic\tfalse\n",
        encoding="utf-8",
    )
    return {
        "corpus_dir": corpus_dir,
        "frequency_dict": dict_dir / "freq.txt",
        "stopwords": [dict_dir / "stop.txt"],
        "protected": dict_dir / "protected.txt",
        "tags_file": tags,
    }


def write_fixture_config(root, paths, n_topics=3, seed=1, max_iter=20,
                         bin_years=2, extra=""):
    cfg = root / "config.toml"
    stop_list = ", ".join(f'"{p}"' for p in paths["stopwords"])
    cfg.write_text(
        f"""
[paths]
corpus_dir = "{paths['corpus_dir']}"
frequency_dict = "{paths['frequency_dict']}"
stopwords = [{stop_list}]
protected = "{paths['protected']}"
tags_file = "{paths['tags_file']}"
output_dir = "{root / 'out'}"

[ingest]
bin_years = {bin_years}
min_df = 2

[model]
n_topics = {n_topics}
seed = {seed}
max_iter = {max_iter}

[grid]
k_values = [2, 3]
seeds = [1, 2]
heldout_fraction = 0.1

[analysis]
from_year = 0
{extra}
""",
        encoding="utf-8",
    )
    return cfg
