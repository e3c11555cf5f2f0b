"""Tests for run configuration parsing and validation."""

from __future__ import annotations

import math

import pytest

from rydssh.config import RunConfig, build_run_config, parse_config_file, validate_run_config
from rydssh.errors import ConfigError
from rydssh.lattice import MAGIC_ANGLE, PI_OVER_4


def write(tmp_path, text: str):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


class TestConfigFile:
    def test_parses_typed_values(self, tmp_path):
        values = parse_config_file(
            write(tmp_path, "# geometry\nbeta_x = 0.8\nbeta-y=0.2  # inline\n\nquiet = yes\ncells_x = 4\noutput = none\n")
        )
        assert values == {"beta_x": 0.8, "beta_y": 0.2, "quiet": True, "cells_x": 4, "output": None}

    def test_unknown_key_names_line(self, tmp_path):
        with pytest.raises(ConfigError, match=r"run.cfg:2: unknown key 'colour'"):
            parse_config_file(write(tmp_path, "beta_x = 0.5\ncolour = red\n"))

    def test_duplicate_key(self, tmp_path):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_file(write(tmp_path, "beta_x = 0.5\nbeta_x = 0.6\n"))

    def test_malformed_line(self, tmp_path):
        with pytest.raises(ConfigError, match="expected key=value"):
            parse_config_file(write(tmp_path, "beta_x 0.5\n"))

    def test_bad_value(self, tmp_path):
        with pytest.raises(ConfigError, match="bad value for cells_x"):
            parse_config_file(write(tmp_path, "cells_x = six\n"))

    def test_command_not_allowed(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config_file(write(tmp_path, "command = zak\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="Cannot read"):
            parse_config_file(tmp_path / "absent.cfg")


class TestBuild:
    def test_flags_override_file(self):
        cfg = build_run_config("bands", {"beta_x": 0.8, "beta_y": 0.3}, {"beta_x": 0.2, "beta_y": None})
        assert cfg.beta_x == 0.2
        assert cfg.beta_y == 0.3

    def test_defaults(self):
        cfg = build_run_config("bands", {}, {})
        assert cfg.theta_m == MAGIC_ANGLE
        assert cfg.format == "csv"
        assert cfg.cells_x == 6 and cfg.width == 8
        assert cfg.workers == 0

    def test_theta_mode(self):
        assert build_run_config("bands", {}, {"theta_m_mode": "pi4"}).theta_m == PI_OVER_4
        assert build_run_config("bands", {}, {"theta_m_rad": 0.3}).theta_m == 0.3

    def test_longrange_cutoff_suffix(self):
        cfg = build_run_config("finite", {}, {"coupling": "longrange:2.5"})
        assert cfg.coupling == "longrange"
        assert cfg.cutoff == 2.5

    def test_bad_cutoff_suffix(self):
        with pytest.raises(ConfigError):
            build_run_config("finite", {}, {"coupling": "longrange:far"})

    def test_all_problems_reported(self):
        with pytest.raises(ConfigError) as info:
            build_run_config("bands", {}, {"beta_x": 1.5, "format": "xml"})
        assert "--beta-x" in str(info.value)
        assert "--format" in str(info.value)


class TestValidate:
    def test_valid_default(self):
        assert validate_run_config(RunConfig()) == []

    def test_theta_both_given(self):
        problems = validate_run_config(RunConfig(theta_m_rad=0.5, theta_m_mode="magic"))
        assert any("not both" in p for p in problems)

    def test_theta_out_of_range(self):
        assert validate_run_config(RunConfig(theta_m_rad=math.pi))

    def test_plot_needs_output(self):
        assert validate_run_config(RunConfig(emit_plot=True))

    def test_trajectory_needs_end(self):
        assert validate_run_config(RunConfig(command="trajectory"))
        assert validate_run_config(RunConfig(command="trajectory", beta_x_end=0.7, beta_y_end=0.6)) == []

    def test_overrides_need_nearest(self):
        assert validate_run_config(RunConfig(coupling="longrange", override_j2x=0.0))

    @pytest.mark.parametrize(
        "field, value",
        [("cells_x", 1), ("width", 1), ("k_samples", 8), ("resolution", 5), ("steps", 10), ("workers", -1)],
    )
    def test_lower_bounds(self, field, value):
        assert validate_run_config(RunConfig(**{field: value}))

    def test_beta_range_order(self):
        assert validate_run_config(RunConfig(beta_min=0.6, beta_max=0.4))


def test_metadata_round_trip():
    cfg = build_run_config("finite", {"cells_x": 4}, {"beta_x": 0.7, "override_j2y": 0.0})
    meta = cfg.metadata()
    meta.update({"tool": "rydssh", "version": "0"})
    assert RunConfig.from_metadata(meta) == cfg
