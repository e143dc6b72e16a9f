"""Serialization: fixed-precision CSV, JSON-lines reports, digests, manifests.

Floats are written with 17 significant digits, enough to round-trip IEEE
doubles, so exact-engine outputs are byte-stable across runs on the same
floating-point platform.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])


def _canonical(obj):
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return f"{float(obj):.17g}"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


def digest_inputs(**kwargs) -> str:
    """Stable sha256 over canonicalized keyword inputs."""
    text = json.dumps(_canonical(kwargs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def write_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(_canonical(rec), sort_keys=True) + "\n")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class StageTimer:
    """Wall-clock bookkeeping for the run manifest."""

    def __init__(self):
        self.t0 = time.monotonic()
        self.stages: dict[str, float] = {}
        self._mark = self.t0

    def stage(self, name: str) -> None:
        now = time.monotonic()
        self.stages[name] = self.stages.get(name, 0.0) + (now - self._mark)
        self._mark = now

    @property
    def total(self) -> float:
        return time.monotonic() - self.t0


def write_manifest(path, config: dict, outputs: list[str], timer: StageTimer,
                   version: str) -> dict:
    manifest = {
        "config": config,
        "version": version,
        "wall_clock_seconds": round(timer.total, 6),
        "stage_seconds": {k: round(v, 6) for k, v in timer.stages.items()},
        "outputs": {str(Path(p).name): file_digest(p) for p in outputs},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_canonical(manifest), sort_keys=True, indent=2) + "\n")
    return manifest
