#!/usr/bin/env python3
"""Summarize a phase-diagram CSV into a markdown report.

Usage:
    rydssh phase-diagram --resolution 61 --output data/phases.csv
    python scripts/phase_report.py data/phases.csv docs/PHASE_REPORT.md
"""

from __future__ import annotations

import csv
import json
import math
import sys
from collections import Counter, defaultdict
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from rydssh.phases import PhaseLabel


def load_points(csv_path: Path) -> list[dict[str, str]]:
    with open(csv_path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _float(text: str) -> float:
    return float(text) if text not in ("", "nan") else math.nan


def generate_report(csv_path: Path, output_path: Path) -> None:
    """Write label counts, gap statistics and failed points as markdown plus a JSON sidecar."""
    print("Loading phase points...")
    points: list[dict[str, str]] = load_points(csv_path)
    if not points:
        print(f"Error: {csv_path} has no rows", file=sys.stderr)
        sys.exit(1)

    counts: Counter[str] = Counter(p["label"] for p in points)
    gaps: dict[str, list[float]] = defaultdict(list)
    for p in points:
        g: float = _float(p["min_gap"])
        if math.isfinite(g):
            gaps[p["label"]].append(g)
    failed: list[dict[str, str]] = [p for p in points if p.get("error")]
    betas: list[float] = sorted({_float(p["beta_x"]) for p in points})

    lines: list[str] = []
    lines.append("# Phase Diagram Report")
    lines.append("")
    lines.append(f"Source: `{csv_path}`")
    lines.append("")
    lines.append("| Metric | Value |")
    lines.append("|--------|-------|")
    lines.append(f"| Points classified | {len(points):,} |")
    lines.append(f"| Offset range | {betas[0]:.3f} to {betas[-1]:.3f} ({len(betas)} per axis) |")
    lines.append(f"| Points with diagnostics | {len(failed):,} |")
    lines.append("")

    lines.append("## Labels")
    lines.append("")
    lines.append("| Label | Points | % of scan | Median min gap (J) |")
    lines.append("|-------|--------|-----------|--------------------|")
    for label in PhaseLabel:
        n: int = counts.get(label.value, 0)
        values: list[float] = sorted(gaps.get(label.value, []))
        median: str = f"{values[len(values) // 2]:.3g}" if values else "-"
        lines.append(f"| {label.value} | {n:,} | {100.0 * n / len(points):.1f} | {median} |")
    lines.append("")

    missing: list[str] = [lab.value for lab in PhaseLabel if lab is not PhaseLabel.BOUNDARY and counts.get(lab.value, 0) == 0]
    if missing:
        lines.append(f"Labels absent from this scan: {', '.join(missing)}.")
        lines.append("")

    if failed:
        lines.append("## Diagnostics")
        lines.append("")
        lines.append("| beta_x | beta_y | Message |")
        lines.append("|--------|--------|---------|")
        for p in failed[:50]:
            lines.append(f"| {p['beta_x']} | {p['beta_y']} | {p['error']} |")
        if len(failed) > 50:
            lines.append(f"| ... | ... | {len(failed) - 50} more |")
        lines.append("")

    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text("\n".join(lines), encoding="utf-8")
    print(f"Report written to: {output_path}")

    json_path: Path = output_path.with_suffix(".json")
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump({"counts": dict(sorted(counts.items())), "n_points": len(points), "n_failed": len(failed)}, f, indent=2)
    print(f"Structured data written to: {json_path}")


def main() -> None:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        sys.exit(2)
    csv_path: Path = Path(sys.argv[1])
    if not csv_path.exists():
        print(f"Error: {csv_path} not found", file=sys.stderr)
        sys.exit(1)
    generate_report(csv_path, Path(sys.argv[2]))


if __name__ == "__main__":
    main()
