"""Pipeline configuration: one TOML file plus command-line overrides.

Sections mirror the pipeline stages (``paths``, ``ingest``, ``model``,
``grid``, ``analysis``, ``run``); flags win over file values. Path
existence is checked per command, not up front, so partial configs stay
usable.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter version
    import tomli as tomllib

from .errors import DataError
from .model import Hyperparams
from .selection import GridSpec

__all__ = ["PipelineConfig", "DEFAULTS"]

DEFAULTS = {
    "paths": {
        "corpus_dir": "corpus",
        "metadata": "",  # defaults to <corpus_dir>/metadata.json
        "frequency_dict": "",
        "custom_dict": "",
        "lemma_table": "",
        "stopwords": [],
        "protected": "",
        "tags_file": "",
        "output_dir": "out",
        "model_dir": "",  # defaults to <output>/models/K<k>-s<seed>
    },
    "ingest": {
        "bin_years": 1,
        "min_df": 2,
        "min_token_len": 3,
        "max_edit_distance": 2,
        "languages": ["spanish"],
        "year_min": 1900,
        "year_max": 2100,
    },
    "model": {
        "n_topics": 90,
        "sigma2": 0.005,
        "delta2": 0.01,
        "a2": 1.0,
        "alpha0": 0.0,
        "seed": 0,
        # fitting knobs (everything past the generative hyperparameters)
        "obs_variance": 0.5,
        "max_iter": 100,
        "tol": 1e-4,
        "doc_max_iter": 25,
        "doc_tol": 1e-6,
        "chain_inner_iter": 2,
        "chain_opt_maxiter": 50,
        "init_lda_iter": 30,
        "init_noise": 1e-3,
    },
    "grid": {
        "k_values": list(range(50, 151, 10)),
        "seeds": [0, 1, 2],
        "heldout_fraction": 0.1,
    },
    "analysis": {
        "assignment_mass": 0.5,
        "from_year": 0,  # 0 means unrestricted
        "report_bin_years": 5,
        "top_n_words": 10,
    },
    "run": {
        "workers": 1,
    },
}

_HYPER_KEYS = ("n_topics", "sigma2", "delta2", "a2", "alpha0", "seed")


def _merge(base, update):
    out = dict(base)
    for key, value in update.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


@dataclass
class PipelineConfig:
    """Validated view over the merged configuration."""

    paths: dict = field(default_factory=dict)
    ingest: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path=None, overrides=None):
        """Merge defaults <- TOML file <- overrides (flags)."""
        merged = {k: dict(v) for k, v in DEFAULTS.items()}
        if path:
            path = Path(path)
            if not path.exists():
                raise DataError(f"config file not found: {path}")
            try:
                data = tomllib.loads(path.read_text(encoding="utf-8"))
            except tomllib.TOMLDecodeError as exc:
                raise DataError(f"config file {path}: {exc}") from exc
            unknown = set(data) - set(DEFAULTS)
            if unknown:
                raise DataError(
                    f"unknown config sections: {sorted(unknown)}"
                )
            merged = _merge(merged, data)
        merged = _merge(merged, overrides or {})
        cfg = cls(**{k: merged[k] for k in DEFAULTS})
        cfg._check_ranges()
        return cfg

    def _check_ranges(self):
        ingest = self.ingest
        if int(ingest["bin_years"]) < 1:
            raise DataError("ingest.bin_years must be >= 1")
        if int(ingest["min_df"]) < 1:
            raise DataError("ingest.min_df must be >= 1")
        if int(ingest["max_edit_distance"]) < 0:
            raise DataError("ingest.max_edit_distance must be >= 0")
        if not 0.0 < float(self.analysis["assignment_mass"]) <= 1.0:
            raise DataError("analysis.assignment_mass must be in (0, 1]")
        if int(self.run["workers"]) < 1:
            raise DataError("run.workers must be >= 1")

    # -- derived objects -------------------------------------------------

    def hyperparams(self):
        values = {k: self.model[k] for k in _HYPER_KEYS}
        return Hyperparams(
            n_topics=int(values["n_topics"]),
            sigma2=float(values["sigma2"]),
            delta2=float(values["delta2"]),
            a2=float(values["a2"]),
            alpha0=values["alpha0"],
            seed=int(values["seed"]),
        )

    def fit_options(self):
        return {k: v for k, v in self.model.items() if k not in _HYPER_KEYS}

    def grid_spec(self):
        return GridSpec(
            k_values=tuple(self.grid["k_values"]),
            seeds=tuple(self.grid["seeds"]),
            heldout_fraction=float(self.grid["heldout_fraction"]),
            assignment_mass=float(self.analysis["assignment_mass"]),
        )

    def snapshot(self):
        """Plain dict of the effective configuration (for manifests)."""
        return {
            "paths": dict(self.paths),
            "ingest": dict(self.ingest),
            "model": dict(self.model),
            "grid": dict(self.grid),
            "analysis": dict(self.analysis),
            "run": dict(self.run),
        }

    # -- paths -----------------------------------------------------------

    def output_dir(self):
        return Path(self.paths["output_dir"])

    def ingest_dir(self):
        return self.output_dir() / "ingest"

    def corpus_archive(self):
        return self.ingest_dir() / "corpus.json"

    def model_dir(self):
        if self.paths.get("model_dir"):
            return Path(self.paths["model_dir"])
        return (
            self.output_dir()
            / "models"
            / f"K{int(self.model['n_topics'])}-s{int(self.model['seed'])}"
        )

    def require_path(self, value, description):
        if not value:
            raise DataError(f"config is missing a path for {description}")
        path = Path(value)
        if not path.exists():
            raise DataError(f"{description} not found: {path}")
        return path
