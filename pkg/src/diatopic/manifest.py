"""Run provenance: canonical JSON, content hashing and the run manifest.

Every pipeline stage appends one record to ``manifest.jsonl`` in its
output directory. The record snapshots the effective configuration, the
SHA-256 of every input file, the tool version, the seed and per-stage
timings, so any output file can be traced back to the exact inputs that
produced it. Timestamps live only here; the data outputs themselves are
byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "canonical_json",
    "write_json",
    "read_json",
    "sha256_bytes",
    "sha256_file",
    "RunManifest",
    "StageTimer",
]

MANIFEST_NAME = "manifest.jsonl"


def canonical_json(obj):
    """Serialize ``obj`` to a stable, hashable JSON string."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_json(path, obj):
    """Write ``obj`` as deterministic, human-readable JSON."""
    text = json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def sha256_bytes(data):
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class StageTimer:
    """Accumulates wall-clock seconds per named stage."""

    def __init__(self):
        self.timings = {}
        self._starts = {}

    def start(self, stage):
        self._starts[stage] = time.perf_counter()

    def stop(self, stage):
        self.timings[stage] = round(
            time.perf_counter() - self._starts.pop(stage), 6
        )


@dataclass
class RunManifest:
    """One provenance record for one command invocation."""

    command: str
    config: dict
    input_hashes: dict
    seed: int | None = None
    tool_version: str = ""
    timings: dict = field(default_factory=dict)
    started_at: str = ""

    @classmethod
    def collect(cls, command, config, input_paths, seed=None):
        from . import __version__

        hashes = {}
        for path in sorted(str(p) for p in input_paths):
            p = Path(path)
            if p.is_dir():
                for child in sorted(p.rglob("*")):
                    if child.is_file():
                        hashes[str(child)] = sha256_file(child)
            elif p.is_file():
                hashes[str(p)] = sha256_file(p)
        return cls(
            command=command,
            config=config,
            input_hashes=hashes,
            seed=seed,
            tool_version=__version__,
            started_at=time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        )

    def append_to(self, output_dir):
        """Append this record to the directory's single manifest file."""
        record = {
            "command": self.command,
            "config": self.config,
            "input_hashes": self.input_hashes,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "timings": self.timings,
            "started_at": self.started_at,
        }
        path = Path(output_dir) / MANIFEST_NAME
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(record) + "\n")
        return path
