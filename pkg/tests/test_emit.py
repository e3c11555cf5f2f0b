"""Tests for result serialization."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from rydssh.config import RunConfig
from rydssh.emit import Result, emit, format_value, plot_script, render_csv, render_json, to_plain, with_mhz_columns
from rydssh.errors import OutputError


def sample() -> Result:
    rows = [{"k": 0.1, "energy": np.float64(1.0 / 3.0), "flag": True}, {"k": 0.2, "energy": math.nan, "flag": False}]
    return Result("bands", ["k", "energy", "flag"], rows, ["energy"])


def test_format_value():
    assert format_value(None) == ""
    assert format_value(np.int64(3)) == "3"
    assert format_value(1.0 / 3.0) == "0.333333333"
    assert format_value(math.nan) == "nan"
    assert format_value(np.bool_(True)) == "true"


def test_to_plain():
    assert to_plain({"a": np.array([1.0 / 3.0, math.inf])}) == {"a": [0.333333333, None]}
    assert to_plain((np.int32(2), "x")) == [2, "x"]


def test_render_csv():
    assert render_csv(sample()) == "k,energy,flag\n0.1,0.333333333,true\n0.2,nan,false\n"


def test_mhz_columns():
    scaled = with_mhz_columns(sample(), 2.0)
    assert scaled.columns == ["k", "energy", "energy_mhz", "flag"]
    assert scaled.rows[0]["energy_mhz"] == pytest.approx(2.0 / 3.0)
    unscaled = sample()
    assert with_mhz_columns(unscaled, None) is unscaled


def test_render_json_envelope():
    cfg = RunConfig(beta_x=0.123456789012)
    doc = json.loads(render_json(Result("zak", ["zx"], [{"zx": math.pi}], single=True), cfg, {"chern": 0}))
    assert doc["metadata"]["tool"] == "rydssh"
    assert doc["metadata"]["beta_x"] == 0.123456789012
    assert doc["data"]["zak"]["zx"] == pytest.approx(math.pi, abs=1e-8)
    assert doc["data"]["chern"] == 0


def test_json_is_deterministic():
    cfg = RunConfig()
    assert render_json(sample(), cfg) == render_json(sample(), cfg)


def test_plot_scripts():
    script = plot_script(Result("bands", ["s", "e_minus", "e_plus"], []), "out/bands.csv")
    assert "out/bands.csv" in script and "using 1:2" in script
    assert plot_script(Result("dirac", ["kx"], []), "d.csv") is None


def test_emit_writes_files(tmp_path):
    out = tmp_path / "sub" / "bands.csv"
    cfg = RunConfig(output=str(out), emit_plot=True, quiet=True)
    emit(Result("bands", ["s", "e_minus", "e_plus"], [{"s": 0.0, "e_minus": -1.0, "e_plus": 1.0}]), cfg)
    assert out.read_text() == "s,e_minus,e_plus\n0,-1,1\n"
    assert (tmp_path / "sub" / "bands.gp").exists()


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = RunConfig(output=str(blocker / "out.csv"), quiet=True)
    with pytest.raises(OutputError):
        emit(sample(), cfg)
