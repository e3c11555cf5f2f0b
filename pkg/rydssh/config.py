"""Run configuration: defaults, key=value config files and validation.

Precedence is built-in defaults < config file < command-line flags.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Callable

from rydssh.errors import ConfigError
from rydssh.lattice import THETA_MODES, GeometryConfig, theta_from_mode

# --- Output ---

FORMATS: tuple[str, ...] = ("csv", "json")
TOOL_NAME: str = "rydssh"

# --- Geometry ---

DEFAULT_THETA_MODE: str = "magic"

# --- Finite lattice ---

BOUNDARIES: tuple[str, ...] = ("open", "periodic")
COUPLINGS: tuple[str, ...] = ("nearest", "longrange")
REPORTS: tuple[str, ...] = ("states", "midgap", "summary")
ORIENTATIONS: tuple[str, ...] = ("x", "y")

COMMANDS: tuple[str, ...] = (
    "hoppings",
    "bands",
    "symm",
    "zak",
    "dirac",
    "nodal",
    "curvature",
    "finite",
    "ribbon",
    "phase-diagram",
    "trajectory",
)


@dataclass
class RunConfig:
    """Every input of one invocation; None means "not given, use the default"."""

    command: str = "bands"
    beta_x: float = 0.5
    beta_y: float = 0.5
    theta_m_rad: float | None = None
    theta_m_mode: str | None = None
    scale_mhz: float | None = None
    output: str | None = None
    format: str = "csv"
    emit_plot: bool = False
    quiet: bool = False
    # 0: cpu_count - 1
    workers: int = 0
    # momentum space
    grid: int = 301
    path_points: int = 100
    band_grid: int | None = None
    lines: int = 201
    steps: int = 401
    gap_tol: float = 1e-6
    seed_grid: int = 301
    loop_radius: float = 0.1
    loop_samples: int = 256
    curvature_grid: int = 101
    # finite lattice
    cells_x: int = 6
    cells_y: int = 6
    boundary: str = "open"
    coupling: str = "nearest"
    cutoff: float = 3.0
    override_j2x: float | None = None
    override_j2y: float | None = None
    report: str = "midgap"
    dump_states: str | None = None
    # ribbon
    orientation: str = "x"
    width: int = 8
    k_samples: int = 256
    # scans
    resolution: int = 61
    beta_min: float = 0.0
    beta_max: float = 1.0
    beta_x_end: float | None = None
    beta_y_end: float | None = None
    path_steps: int = 11

    @property
    def theta_m(self) -> float:
        if self.theta_m_rad is not None:
            return self.theta_m_rad
        return theta_from_mode(self.theta_m_mode or DEFAULT_THETA_MODE)

    def geometry(self) -> GeometryConfig:
        return GeometryConfig(self.beta_x, self.beta_y, self.theta_m)

    def metadata(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_metadata(cls, meta: dict[str, Any]) -> RunConfig:
        names: set[str] = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in meta.items() if k in names})


def _parse_bool(text: str) -> bool:
    lowered: str = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(text: str) -> Any:
        return None if text.strip().lower() in ("", "none") else conv(text)

    return parse


_COERCE: dict[str, Callable[[str], Any]] = {
    "command": str,
    "beta_x": float,
    "beta_y": float,
    "theta_m_rad": _optional(float),
    "theta_m_mode": _optional(str),
    "scale_mhz": _optional(float),
    "output": _optional(str),
    "format": str,
    "emit_plot": _parse_bool,
    "quiet": _parse_bool,
    "workers": int,
    "grid": int,
    "path_points": int,
    "band_grid": _optional(int),
    "lines": int,
    "steps": int,
    "gap_tol": float,
    "seed_grid": int,
    "loop_radius": float,
    "loop_samples": int,
    "curvature_grid": int,
    "cells_x": int,
    "cells_y": int,
    "boundary": str,
    "coupling": str,
    "cutoff": float,
    "override_j2x": _optional(float),
    "override_j2y": _optional(float),
    "report": str,
    "dump_states": _optional(str),
    "orientation": str,
    "width": int,
    "k_samples": int,
    "resolution": int,
    "beta_min": float,
    "beta_max": float,
    "beta_x_end": _optional(float),
    "beta_y_end": _optional(float),
    "path_steps": int,
}


def parse_config_file(path: str | Path) -> dict[str, Any]:
    """Read a flat key=value file (``#`` comments, blank lines ignored).

    Raises:
        ConfigError: On unreadable files, malformed lines, unknown or
            duplicate keys and values of the wrong type, naming the line.
    """
    try:
        text: str = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e

    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line: str = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _COERCE or key == "command":
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _COERCE[key](value)
        except ValueError as e:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {e}") from e
    return values


def build_run_config(command: str, file_values: dict[str, Any], flag_values: dict[str, Any]) -> RunConfig:
    """Merge defaults, file values and explicitly given flags, then validate."""
    merged: dict[str, Any] = {"command": command}
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    coupling: Any = merged.get("coupling")
    if isinstance(coupling, str) and coupling.startswith("longrange:"):
        try:
            merged["cutoff"] = float(coupling.split(":", 1)[1])
        except ValueError as e:
            raise ConfigError(f"bad --coupling {coupling!r}: {e}") from e
        merged["coupling"] = "longrange"
    cfg: RunConfig = RunConfig(**merged)
    problems: list[str] = validate_run_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def _check_range(problems: list[str], name: str, value: float, lo: float, hi: float = math.inf) -> None:
    if not lo <= value <= hi:
        bound: str = f"[{lo}, {hi}]" if hi != math.inf else f">= {lo}"
        problems.append(f"--{name.replace('_', '-')}={value!r} must be {bound}")


def validate_run_config(cfg: RunConfig) -> list[str]:
    """Every violation in the configuration (empty list means valid)."""
    problems: list[str] = []
    if cfg.command not in COMMANDS:
        problems.append(f"unknown command {cfg.command!r}")
    _check_range(problems, "beta_x", cfg.beta_x, 0.0, 1.0)
    _check_range(problems, "beta_y", cfg.beta_y, 0.0, 1.0)
    if cfg.theta_m_rad is not None and cfg.theta_m_mode is not None:
        problems.append("give either --theta-m or --theta-m-mode, not both")
    if cfg.theta_m_mode is not None and cfg.theta_m_mode not in THETA_MODES:
        problems.append(f"--theta-m-mode must be one of {sorted(THETA_MODES)}, got {cfg.theta_m_mode!r}")
    if cfg.theta_m_rad is not None:
        _check_range(problems, "theta_m", cfg.theta_m_rad, 0.0, math.pi / 2.0)
    if cfg.scale_mhz is not None and not cfg.scale_mhz > 0.0:
        problems.append(f"--scale-mhz must be positive, got {cfg.scale_mhz!r}")
    if cfg.format not in FORMATS:
        problems.append(f"--format must be one of {FORMATS}, got {cfg.format!r}")
    if cfg.emit_plot and cfg.output is None:
        problems.append("--plot needs --output (the plot script references the data file)")
    _check_range(problems, "workers", cfg.workers, 0)

    for name, lo in (
        ("grid", 16),
        ("path_points", 2),
        ("lines", 3),
        ("steps", 64),
        ("seed_grid", 16),
        ("loop_samples", 64),
        ("curvature_grid", 3),
        ("cells_x", 2),
        ("cells_y", 2),
        ("width", 2),
        ("k_samples", 16),
        ("resolution", 11),
        ("path_steps", 2),
    ):
        _check_range(problems, name, getattr(cfg, name), lo)
    if cfg.band_grid is not None:
        _check_range(problems, "band_grid", cfg.band_grid, 2)
    _check_range(problems, "gap_tol", cfg.gap_tol, 0.0)
    if not cfg.loop_radius > 0.0:
        problems.append(f"--loop-radius must be positive, got {cfg.loop_radius!r}")

    if cfg.boundary not in BOUNDARIES:
        problems.append(f"--boundary must be one of {BOUNDARIES}, got {cfg.boundary!r}")
    if cfg.coupling not in COUPLINGS:
        problems.append(f"--coupling must be one of {COUPLINGS}, got {cfg.coupling!r}")
    elif cfg.coupling == "longrange":
        _check_range(problems, "cutoff", cfg.cutoff, 1.0)
        if cfg.override_j2x is not None or cfg.override_j2y is not None:
            problems.append("--override-j2x/--override-j2y only apply to --coupling nearest")
    if cfg.report not in REPORTS:
        problems.append(f"--report must be one of {REPORTS}, got {cfg.report!r}")
    if cfg.orientation not in ORIENTATIONS:
        problems.append(f"--orientation must be one of {ORIENTATIONS}, got {cfg.orientation!r}")

    if not 0.0 <= cfg.beta_min < cfg.beta_max <= 1.0:
        problems.append(f"need 0 <= --beta-min < --beta-max <= 1, got {cfg.beta_min}, {cfg.beta_max}")
    for name in ("beta_x_end", "beta_y_end"):
        value: float | None = getattr(cfg, name)
        if value is not None:
            _check_range(problems, name, value, 0.0, 1.0)
    if cfg.command == "trajectory" and (cfg.beta_x_end is None or cfg.beta_y_end is None):
        problems.append("trajectory needs --beta-x-end and --beta-y-end")
    return problems
