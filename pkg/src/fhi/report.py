"""Run reports: one JSON object per run, appended as a line to a report file."""

from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from fhi import __version__

#: report keys that legitimately differ between identical runs
VOLATILE_KEYS = ("wall_time_s", "started_at")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if hasattr(obj, "value") and hasattr(obj, "name") and not isinstance(obj, (int, float, str)):
        return obj.value  # enums
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunReport:
    command: str
    config: dict = field(default_factory=dict)
    seed: int | None = None
    diagnostics: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    status: str = "ok"
    version: str = __version__
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__
    started_at: float = field(default_factory=time.time)
    wall_time_s: float = 0.0

    def finish(self, t0: float | None = None) -> RunReport:
        self.wall_time_s = time.perf_counter() - t0 if t0 is not None else 0.0
        return self

    def add_output(self, kind: str, path) -> None:
        self.outputs[kind] = {"path": str(path), "sha256": file_digest(path)}

    def to_dict(self, *, stable: bool = False) -> dict:
        d = _jsonable(asdict(self))
        if stable:
            for k in VOLATILE_KEYS:
                d.pop(k, None)
        return d

    def to_json(self, *, stable: bool = False) -> str:
        return json.dumps(self.to_dict(stable=stable), sort_keys=True)

    def append_to(self, path) -> None:
        with open(Path(path), "a", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")


def read_reports(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
