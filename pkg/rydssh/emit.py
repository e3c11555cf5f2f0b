"""Deterministic result writers: CSV, JSON envelope and gnuplot scripts."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, TextIO

import numpy as np

from rydssh import __version__
from rydssh.config import TOOL_NAME, RunConfig
from rydssh.errors import OutputError

SIG_DIGITS: int = 9


@dataclass
class Result:
    """A table of rows plus the columns that carry energies in units of J.

    ``single`` results (one summary row) are emitted as an object in JSON
    instead of a list.
    """

    name: str
    columns: list[str]
    rows: list[dict[str, Any]]
    energy_columns: list[str] = field(default_factory=list)
    single: bool = False


def format_value(value: Any) -> str:
    """CSV text for one cell: 9 significant digits for floats, empty for missing."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return f"{float(value):.{SIG_DIGITS}g}"
    return str(value)


def to_plain(value: Any) -> Any:
    """Convert numpy scalars/arrays to JSON-ready Python values rounded to 9 significant digits."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return None
        return float(f"{float(value):.{SIG_DIGITS}g}")
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def with_mhz_columns(result: Result, scale_mhz: float | None) -> Result:
    """Add ``<column>_mhz`` next to every energy column."""
    if scale_mhz is None or not result.energy_columns:
        return result
    columns: list[str] = []
    for c in result.columns:
        columns.append(c)
        if c in result.energy_columns:
            columns.append(f"{c}_mhz")
    rows: list[dict[str, Any]] = []
    for row in result.rows:
        scaled: dict[str, Any] = dict(row)
        for c in result.energy_columns:
            v = row.get(c)
            scaled[f"{c}_mhz"] = None if v is None else float(v) * scale_mhz
        rows.append(scaled)
    return Result(result.name, columns, rows, [], result.single)


def render_csv(result: Result) -> str:
    buf: io.StringIO = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([format_value(row.get(c)) for c in result.columns])
    return buf.getvalue()


def render_json(result: Result, cfg: RunConfig, extra: dict[str, Any] | None = None) -> str:
    metadata: dict[str, Any] = cfg.metadata()
    metadata.update({"tool": TOOL_NAME, "version": __version__})
    rows: list[dict[str, Any]] = [{c: row.get(c) for c in result.columns} for row in result.rows]
    data: dict[str, Any] = {result.name: rows[0] if result.single and rows else rows}
    if extra:
        data.update(extra)
    envelope: dict[str, Any] = {"metadata": metadata, "data": to_plain(data)}
    return json.dumps(envelope, sort_keys=True, indent=2) + "\n"


@contextmanager
def open_output(path: str | None) -> Iterator[TextIO]:
    """Yield a writable text stream: the file at ``path`` (parents created) or stdout."""
    if path is None:
        yield sys.stdout
        return
    try:
        target: Path = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        f = open(target, "w", encoding="utf-8", newline="")
    except OSError as e:
        raise OutputError(f"Cannot open {path} for writing: {e}") from e
    try:
        with f:
            yield f
    except OSError as e:
        raise OutputError(f"Failed writing {path}: {e}") from e


def write_text(path: str | None, text: str) -> None:
    with open_output(path) as f:
        try:
            f.write(text)
        except OSError as e:
            raise OutputError(f"Failed writing {path or 'stdout'}: {e}") from e


# ---------------------------------------------------------------------------
# gnuplot scripts
# ---------------------------------------------------------------------------

_PHASE_COLORS: dict[str, int] = {"NT": 0, "TX": 1, "TY": 2, "TXY": 3, "SM": 4, "NLSM": 5, "BOUNDARY": 6}


def _csv_column(result: Result, name: str) -> int:
    return result.columns.index(name) + 1


def plot_script(result: Result, data_path: str) -> str | None:
    """A gnuplot script plotting the CSV at data_path, or None when the result has no plot."""
    header: str = f"set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,700\nset output '{Path(data_path).with_suffix('.png').name}'\n"
    if result.name == "bands":
        s, lo, hi = (_csv_column(result, c) for c in ("s", "e_minus", "e_plus"))
        return header + (
            "set xlabel 'path length (G-X-M-G-Y)'\nset ylabel 'E / J'\n"
            f"plot '{data_path}' using {s}:{lo} with lines title 'E-', "
            f"'' using {s}:{hi} with lines title 'E+'\n"
        )
    if result.name == "phases":
        bx, by = _csv_column(result, "beta_x"), _csv_column(result, "beta_y")
        code: int = _csv_column(result, "label_code")
        palette: str = ", ".join(f"{v} '{c}'" for v, c in zip(range(7), ("grey", "red", "blue", "purple", "orange", "dark-green", "black")))
        tics: str = ", ".join(f"'{k}' {v}" for k, v in _PHASE_COLORS.items())
        return header + (
            "set xlabel 'beta_x'\nset ylabel 'beta_y'\nset size square\n"
            f"set palette defined ({palette})\nset cbrange [0:6]\nset cbtics ({tics})\n"
            f"plot '{data_path}' using {bx}:{by}:{code} with points pt 5 ps 1 palette notitle\n"
        )
    if result.name == "ribbon":
        k, e, edge = (_csv_column(result, c) for c in ("k", "energy", "is_edge_branch"))
        return header + (
            "set xlabel 'k'\nset ylabel 'E / J'\n"
            f"plot '{data_path}' using {k}:{e} with points pt 7 ps 0.3 lc 'grey' title 'bulk', "
            f"'' using {k}:(strcol({edge}) eq 'true' ? ${e} : 1/0) with points pt 7 ps 0.5 lc 'red' title 'edge'\n"
        )
    return None


def phase_label_code(label: str) -> int:
    return _PHASE_COLORS[label]


def emit(result: Result, cfg: RunConfig, extra: dict[str, Any] | None = None) -> None:
    """Write a result in the configured format, plus the plot script when requested.

    Raises:
        OutputError: If any file cannot be written.
    """
    result = with_mhz_columns(result, cfg.scale_mhz)
    text: str = render_json(result, cfg, extra) if cfg.format == "json" else render_csv(result)
    write_text(cfg.output, text)
    if cfg.emit_plot and cfg.output is not None:
        script: str | None = plot_script(result, cfg.output) if cfg.format == "csv" else None
        if script is None:
            print(f"  No plot script for '{result.name}' in {cfg.format} format", file=sys.stderr)
            return
        gp_path: str = str(Path(cfg.output).with_suffix(".gp"))
        write_text(gp_path, script)
        if not cfg.quiet:
            print(f"  Wrote plot script {gp_path}", file=sys.stderr)
