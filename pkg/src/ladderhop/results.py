"""Trajectory and sweep containers with CSV + JSON-sidecar emission."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def param_hash(metadata: dict) -> str:
    blob = json.dumps(_jsonable(metadata), sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:10]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "nan" if np.isnan(x) else repr(float(x))
    return str(x)


@dataclass
class TimeSeries:
    times: np.ndarray
    channels: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def names(self) -> list[str]:
        return list(self.channels)

    def write(self, directory, stem: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        base = directory / f"{stem}_{param_hash(self.metadata)}"
        csv_path = base.parent / (base.name + ".csv")
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", *self.channels])
            cols = [np.asarray(self.times)] + [np.asarray(v) for v in self.channels.values()]
            for row in zip(*cols):
                w.writerow([_fmt(x) for x in row])
        json_path = base.parent / (base.name + ".json")
        json_path.write_text(json.dumps(_jsonable(self.metadata), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


@dataclass
class SweepResult:
    """Rectangular grid of order parameters; masked cells carry an error tag."""

    axes: dict  # {name: 1D grid}, first axis varies slowest
    data: dict = field(default_factory=dict)  # {name: 2D array}
    errors: dict = field(default_factory=dict)  # {(i, j): message}
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple:
        return tuple(len(v) for v in self.axes.values())

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        for ij in self.errors:
            m[ij] = True
        return m

    def write(self, directory, stem: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        base = directory / f"{stem}_{param_hash(self.metadata)}"
        (xname, xs), (yname, ys) = list(self.axes.items())
        csv_path = base.parent / (base.name + ".csv")
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([xname, yname, *self.data, "error"])
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    vals = [_fmt(self.data[k][i, j]) for k in self.data]
                    w.writerow([_fmt(float(x)), _fmt(float(y)), *vals, self.errors.get((i, j), "")])
        json_path = base.parent / (base.name + ".json")
        meta = dict(self.metadata, axes={k: list(map(float, v)) for k, v in self.axes.items()})
        json_path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path
