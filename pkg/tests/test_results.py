import csv
import json

import numpy as np

from ladderhop.results import SweepResult, TimeSeries, param_hash


def test_timeseries_write(tmp_path):
    ts = TimeSeries(np.linspace(0, 1, 3), {"a": np.array([0.1, 0.2, 1 / 3])}, {"x": np.float64(2.5), "k": (1, 2)})
    csv_path, json_path = ts.write(tmp_path, "run_p0.1")
    assert csv_path.name == f"run_p0.1_{param_hash(ts.metadata)}.csv"
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["tau", "a"]
    assert float(rows[3][1]) == 1 / 3  # repr round-trips exactly
    assert json.loads(json_path.read_text()) == {"x": 2.5, "k": [1, 2]}


def test_hash_is_order_independent():
    assert param_hash({"a": 1, "b": 2}) == param_hash({"b": 2, "a": 1})
    assert param_hash({"a": 1}) != param_hash({"a": 2})


def test_sweep_write_and_mask(tmp_path):
    sw = SweepResult({"x": np.array([1.0, 2.0]), "y": np.array([3.0])}, {"v": np.array([[0.5], [np.nan]])}, {(1, 0): "resonance"})
    assert sw.shape == (2, 1)
    assert sw.mask.tolist() == [[False], [True]]
    csv_path, json_path = sw.write(tmp_path, "grid")
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["x", "y", "v", "error"]
    assert rows[2] == ["2.0", "3.0", "nan", "resonance"]
    assert json.loads(json_path.read_text())["axes"] == {"x": [1.0, 2.0], "y": [3.0]}
