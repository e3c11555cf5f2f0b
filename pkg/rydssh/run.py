"""CLI entry point for the Rydberg 2D SSH simulator.

Usage:
    rydssh hoppings       --beta-x BX --beta-y BY [--theta-m RAD | --theta-m-mode magic|pi4] [--scale-mhz S]
    rydssh bands          --beta-x BX --beta-y BY [--grid-mode N] [--path-points N]
    rydssh symm           --beta-x BX --beta-y BY
    rydssh zak            --beta-x BX --beta-y BY [--lines N] [--steps N]
    rydssh dirac          --beta-x BX --beta-y BY [--seed-grid N] [--loop-radius R] [--loop-samples N]
    rydssh nodal          --beta-x BX --beta-y BY [--grid N]
    rydssh curvature      --beta-x BX --beta-y BY [--curvature-grid N]
    rydssh finite         --cells N M [--boundary open|periodic] [--coupling nearest|longrange:RC]
                          [--override-j2x V] [--override-j2y V] [--report states|midgap|summary]
    rydssh ribbon         --orientation x|y [--width W] [--k-samples N]
    rydssh phase-diagram  [--resolution R] [--workers N]
    rydssh trajectory     --beta-x-end BX --beta-y-end BY [--path-steps N]

Every subcommand accepts --config FILE (key=value), --output PATH,
--format csv|json, --plot and --quiet. Exit codes: 0 ok, 2 configuration,
3 numerical failure, 4 output failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Any, Callable

import numpy as np

from rydssh import bloch, emit, phases, realspace, ribbon, topology
from rydssh.config import RunConfig, build_run_config, parse_config_file
from rydssh.emit import Result
from rydssh.errors import EXIT_CONFIG, EXIT_OK, ConfigError, RydSSHError
from rydssh.lattice import GeometryConfig, HoppingSet, bandgap_mhz, hopping_set, validate
from rydssh.linalg import EigenSet


def _status(cfg: RunConfig, message: str) -> None:
    if not cfg.quiet:
        print(message, file=sys.stderr)


def _hoppings(cfg: RunConfig) -> tuple[GeometryConfig, HoppingSet]:
    geom: GeometryConfig = cfg.geometry()
    problems = validate(geom)
    if problems:
        raise problems[0]
    return geom, hopping_set(geom).with_overrides(cfg.override_j2x, cfg.override_j2y)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_hoppings(cfg: RunConfig) -> None:
    """Six hopping energies of a geometry."""
    _, h = _hoppings(cfg)
    row: dict[str, Any] = {"beta_x": cfg.beta_x, "beta_y": cfg.beta_y, "theta_m": cfg.theta_m, **h.as_dict()}
    names: list[str] = list(h.as_dict())
    if cfg.scale_mhz is not None:
        lo, hi = bandgap_mhz(h, cfg.scale_mhz)
        _status(cfg, f"  Direct band gap {lo:.4g} to {hi:.4g} MHz")
    emit.emit(Result("hoppings", ["beta_x", "beta_y", "theta_m"] + names, [row], names, single=True), cfg)


def cmd_bands(cfg: RunConfig) -> None:
    """Bands along G-X-M-G-Y, or on a full grid with --grid-mode."""
    _, h = _hoppings(cfg)
    scan: bloch.GapScan = bloch.gap_scan(h, cfg.grid)
    _status(cfg, f"  Minimum gap {scan.min_gap:.6g} J at k=({scan.argmin.kx:.6f}, {scan.argmin.ky:.6f})")

    if cfg.band_grid is None:
        path: dict[str, np.ndarray] = bloch.band_path(h, cfg.path_points)
        columns: list[str] = ["s", "kx", "ky", "e_minus", "e_plus", "gap"]
        rows: list[dict[str, Any]] = [{c: path[c][i] for c in columns} for i in range(len(path["s"]))]
    else:
        k: np.ndarray = bloch.momentum_grid(cfg.band_grid)
        kx, ky = np.meshgrid(k, k, indexing="ij")
        b: bloch.BandPair = bloch.bands(h, kx, ky)
        columns = ["kx", "ky", "e_minus", "e_plus", "gap"]
        rows = [
            {"kx": kx.flat[i], "ky": ky.flat[i], "e_minus": b.e_minus.flat[i], "e_plus": b.e_plus.flat[i], "gap": b.gap.flat[i]}
            for i in range(kx.size)
        ]
    emit.emit(Result("bands", columns, rows, ["e_minus", "e_plus", "gap"]), cfg)


def cmd_symm(cfg: RunConfig) -> None:
    """Gaps, closing conditions and symmetry residuals at the high-symmetry points."""
    _, h = _hoppings(cfg)
    rows: list[dict[str, Any]] = []
    for name, info in bloch.high_symmetry_gaps(h).items():
        tr, inv, chiral = bloch.symmetry_residuals(h, info["kx"], info["ky"])
        rows.append({"point": name, **info, "tr_residual": tr, "inv_residual": inv, "chiral_residual": chiral})
    columns: list[str] = ["point", "kx", "ky", "gap", "signed_sum", "tr_residual", "inv_residual", "chiral_residual"]
    emit.emit(Result("symm", columns, rows, ["gap", "signed_sum"]), cfg)


def cmd_zak(cfg: RunConfig) -> None:
    """2D Zak phase of the lower band."""
    _, h = _hoppings(cfg)
    zak: topology.ZakVector = topology.zak_vector(h, cfg.lines, cfg.steps)
    is_pi = zak.is_pi()
    label: str = {(False, False): "NT", (True, False): "TX", (False, True): "TY", (True, True): "TXY"}[is_pi]
    row: dict[str, Any] = {
        "zx": zak.zx,
        "zy": zak.zy,
        "zx_over_pi": zak.zx / math.pi,
        "zy_over_pi": zak.zy / math.pi,
        "per_line_std": zak.per_line_std,
        "label": label,
    }
    _status(cfg, f"  Z = ({zak.zx / math.pi:.4f} pi, {zak.zy / math.pi:.4f} pi) -> {label}")
    emit.emit(Result("zak", list(row), [row], single=True), cfg)


def cmd_dirac(cfg: RunConfig) -> None:
    """Dirac points with winding charge and cone geometry."""
    _, h = _hoppings(cfg)
    points: list[topology.DiracPoint] = topology.dirac_points(h, cfg.seed_grid, cfg.loop_radius, cfg.loop_samples)
    _status(cfg, f"  Found {len(points)} Dirac point(s)")
    columns: list[str] = ["kx", "ky", "charge", "tilt_x", "tilt_y", "v_major", "v_minor", "anisotropy"]
    rows: list[dict[str, Any]] = [
        {
            "kx": p.k.kx,
            "ky": p.k.ky,
            "charge": p.charge,
            "tilt_x": p.tilt[0],
            "tilt_y": p.tilt[1],
            "v_major": p.velocities[0],
            "v_minor": p.velocities[1],
            "anisotropy": p.anisotropy,
        }
        for p in points
    ]
    emit.emit(Result("dirac", columns, rows, ["tilt_x", "tilt_y", "v_major", "v_minor"]), cfg)


def cmd_nodal(cfg: RunConfig) -> None:
    """Vertices of the band-touching lines."""
    _, h = _hoppings(cfg)
    nodal: topology.NodalSet = topology.trace_nodal_lines(h, cfg.grid)
    rows: list[dict[str, Any]] = []
    for line_idx, line in enumerate(nodal.polylines):
        gaps = bloch.bands(h, line[:, 0], line[:, 1]).gap
        for v, (kx, ky) in enumerate(line):
            rows.append({"line": line_idx, "vertex": v, "kx": kx, "ky": ky, "gap": gaps[v]})
    _status(cfg, f"  {len(nodal.polylines)} polyline(s), {len(rows)} vertices")
    emit.emit(Result("nodal", ["line", "vertex", "kx", "ky", "gap"], rows, ["gap"]), cfg)


def cmd_curvature(cfg: RunConfig) -> None:
    """Plaquette Berry phases and the Chern number."""
    _, h = _hoppings(cfg)
    cmap: topology.CurvatureMap = topology.berry_curvature_map(h, cfg.curvature_grid)
    k: np.ndarray = np.linspace(-math.pi, math.pi, cfg.curvature_grid)
    centers: np.ndarray = 0.5 * (k[:-1] + k[1:])
    rows: list[dict[str, Any]] = [
        {"kx": centers[i], "ky": centers[j], "berry_phase": cmap.plaquettes[i, j]}
        for i in range(len(centers))
        for j in range(len(centers))
    ]
    _status(cfg, f"  Chern number {cmap.chern}, max |F| = {cmap.max_abs:.3e}")
    emit.emit(Result("curvature", ["kx", "ky", "berry_phase"], rows), cfg, extra={"chern": cmap.chern})


def cmd_finite(cfg: RunConfig) -> None:
    """Exact diagonalization of a finite lattice with localization analysis."""
    geom: GeometryConfig = cfg.geometry()
    spec: realspace.FiniteLatticeSpec = realspace.FiniteLatticeSpec(
        cells_x=cfg.cells_x,
        cells_y=cfg.cells_y,
        boundary=cfg.boundary,  # type: ignore[arg-type]
        coupling_model=cfg.coupling,  # type: ignore[arg-type]
        cutoff=cfg.cutoff,
        j2x=cfg.override_j2x,
        j2y=cfg.override_j2y,
    )
    eigs: EigenSet = realspace.spectrum(spec, geom)
    _status(cfg, f"  Diagonalized {spec.n_sites} sites")

    if cfg.report == "midgap":
        eigs, reports = realspace.midgap_states(spec, geom, eigs)
    else:
        reports = realspace.localization_report(eigs, spec)
    _status(cfg, f"  {len(reports)} state(s) reported")

    columns: list[str] = [
        "state_idx", "energy", "left", "right", "top", "bottom",
        "x_edge", "y_edge", "corner", "ipr", "decay", "decay_rate",
    ]
    rows: list[dict[str, Any]] = [
        {
            "state_idx": r.index,
            "energy": r.energy,
            "left": r.left,
            "right": r.right,
            "top": r.top,
            "bottom": r.bottom,
            "x_edge": r.x_edge,
            "y_edge": r.y_edge,
            "corner": r.corner,
            "ipr": r.ipr,
            "decay": r.decay.kind,
            "decay_rate": r.decay.rate,
        }
        for r in reports
    ]
    if cfg.report == "summary":
        kinds: list[str] = [r.decay.kind for r in reports]
        rows = [
            {
                "n_states": len(reports),
                "n_exponential": kinds.count("exponential"),
                "n_polynomial": kinds.count("polynomial"),
                "n_bulk": kinds.count("bulk"),
                "e_min": float(eigs.values.min()),
                "e_max": float(eigs.values.max()),
            }
        ]
        columns = list(rows[0])
        emit.emit(Result("finite", columns, rows, ["e_min", "e_max"], single=True), cfg)
    else:
        emit.emit(Result("finite", columns, rows, ["energy"]), cfg)

    if cfg.dump_states is not None:
        dump: dict[str, Any] = {
            str(r.index): {"energy": r.energy, "density": realspace.state_density_grid(eigs, spec, r.index)}
            for r in reports
        }
        emit.write_text(cfg.dump_states, emit.render_json(Result("states", [], []), cfg, extra={"densities": dump}))


def cmd_ribbon(cfg: RunConfig) -> None:
    """Ribbon spectrum with edge-branch detection."""
    _, h = _hoppings(cfg)
    spec: ribbon.RibbonSpec = ribbon.RibbonSpec(cfg.orientation, cfg.width, cfg.k_samples)  # type: ignore[arg-type]
    spectrum: ribbon.RibbonSpectrum = ribbon.ribbon_spectrum(h, spec, quiet=cfg.quiet)
    _status(cfg, f"  {spectrum.n_edge_branch_states} edge-branch state(s) over {len(spectrum.k)} momenta")
    rows: list[dict[str, Any]] = [
        {
            "k": spectrum.k[i],
            "band_index": j,
            "energy": spectrum.energies[i, j],
            "edge_weight": spectrum.edge_weight[i, j],
            "is_edge_branch": bool(spectrum.edge_branch[i, j]),
        }
        for i in range(len(spectrum.k))
        for j in range(spectrum.energies.shape[1])
    ]
    emit.emit(Result("ribbon", ["k", "band_index", "energy", "edge_weight", "is_edge_branch"], rows, ["energy"]), cfg)


def cmd_phase_diagram(cfg: RunConfig) -> None:
    """Phase labels over a (beta_x, beta_y) grid."""
    points: list[phases.PhasePoint] = phases.scan(
        cfg.resolution,
        theta_m=cfg.theta_m,
        beta_range=(cfg.beta_min, cfg.beta_max),
        gap_tol=cfg.gap_tol,
        grid=cfg.grid,
        workers=cfg.workers,
        quiet=cfg.quiet,
    )
    columns: list[str] = ["beta_x", "beta_y", "label", "label_code", "min_gap", "zx", "zy", "n_dirac", "error"]
    rows: list[dict[str, Any]] = []
    for p in points:
        row: dict[str, Any] = p.as_row()
        row["label_code"] = emit.phase_label_code(p.label.value)
        rows.append(row)
    emit.emit(Result("phases", columns, rows, ["min_gap"]), cfg)


def cmd_trajectory(cfg: RunConfig) -> None:
    """Dirac-point trajectories along a straight path of offsets."""
    assert cfg.beta_x_end is not None and cfg.beta_y_end is not None
    t: np.ndarray = np.linspace(0.0, 1.0, cfg.path_steps)
    path: list[GeometryConfig] = [
        GeometryConfig(
            cfg.beta_x + s * (cfg.beta_x_end - cfg.beta_x),
            cfg.beta_y + s * (cfg.beta_y_end - cfg.beta_y),
            cfg.theta_m,
        )
        for s in t
    ]
    for geom in path:
        problems = validate(geom)
        if problems:
            raise problems[0]
    tracks: list[list[topology.DiracPoint]] = topology.track_dirac_points(path, cfg.seed_grid, cfg.workers, cfg.quiet)
    rows: list[dict[str, Any]] = []
    for step, (geom, pts) in enumerate(zip(path, tracks)):
        for idx, p in enumerate(pts):
            rows.append(
                {
                    "step": step,
                    "beta_x": geom.beta_x,
                    "beta_y": geom.beta_y,
                    "track": idx,
                    "kx": p.k.kx,
                    "ky": p.k.ky,
                    "charge": p.charge,
                    "anisotropy": p.anisotropy,
                }
            )
    emit.emit(Result("trajectory", ["step", "beta_x", "beta_y", "track", "kx", "ky", "charge", "anisotropy"], rows), cfg)


COMMANDS: dict[str, Callable[[RunConfig], None]] = {
    "hoppings": cmd_hoppings,
    "bands": cmd_bands,
    "symm": cmd_symm,
    "zak": cmd_zak,
    "dirac": cmd_dirac,
    "nodal": cmd_nodal,
    "curvature": cmd_curvature,
    "finite": cmd_finite,
    "ribbon": cmd_ribbon,
    "phase-diagram": cmd_phase_diagram,
    "trajectory": cmd_trajectory,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    # defaults stay None so only flags given on the command line override the config file
    p.add_argument("--config", type=str, help="key=value configuration file")
    p.add_argument("--beta-x", type=float, help="Offset of sublattice B along x in units of a")
    p.add_argument("--beta-y", type=float, help="Offset of sublattice B along y in units of a")
    p.add_argument("--theta-m", dest="theta_m_rad", type=float, help="Dipole angle in radians")
    p.add_argument("--theta-m-mode", type=str, help="Named dipole angle: magic (default) or pi4")
    p.add_argument("--override-j2x", type=float, help="Force the intra-sublattice x hopping")
    p.add_argument("--override-j2y", type=float, help="Force the intra-sublattice y hopping")
    p.add_argument("--scale-mhz", type=float, help="Size of J in MHz; adds *_mhz columns")
    p.add_argument("--output", type=str, help="Output file (default: stdout)")
    p.add_argument("--format", type=str, help="csv (default) or json")
    p.add_argument("--plot", dest="emit_plot", action="store_const", const=True, help="Also write a gnuplot script")
    p.add_argument("--quiet", action="store_const", const=True, help="No status lines or progress bars")
    p.add_argument("--workers", type=int, help="Parallel workers (default 0: cpu_count-1)")
    p.add_argument("--grid", type=int, help="Momentum grid for gap scans (default: 301)")
    p.add_argument("--gap-tol", type=float, help="Gap below which a phase is gapless (default: 1e-6)")


def build_parser() -> argparse.ArgumentParser:
    parser: argparse.ArgumentParser = argparse.ArgumentParser(
        prog="rydssh",
        description="2D SSH model in offset Rydberg lattices",
    )
    sub: argparse._SubParsersAction[argparse.ArgumentParser] = parser.add_subparsers(dest="command", required=True)

    p_hop: argparse.ArgumentParser = sub.add_parser("hoppings", help="Hopping energies of a geometry")
    _add_common(p_hop)

    p_bands: argparse.ArgumentParser = sub.add_parser("bands", help="Band structure")
    _add_common(p_bands)
    p_bands.add_argument("--path-points", type=int, help="Points per path segment (default: 100)")
    p_bands.add_argument("--grid-mode", dest="band_grid", type=int, help="Emit bands on an N x N grid instead of the path")

    p_symm: argparse.ArgumentParser = sub.add_parser("symm", help="High-symmetry gaps and symmetry residuals")
    _add_common(p_symm)

    p_zak: argparse.ArgumentParser = sub.add_parser("zak", help="2D Zak phase")
    _add_common(p_zak)
    p_zak.add_argument("--lines", type=int, help="Transverse lines (default: 201)")
    p_zak.add_argument("--steps", type=int, help="Momenta per line (default: 401)")

    p_dirac: argparse.ArgumentParser = sub.add_parser("dirac", help="Dirac points, charges and cones")
    _add_common(p_dirac)
    p_dirac.add_argument("--seed-grid", type=int, help="Seed grid for the zero search (default: 301)")
    p_dirac.add_argument("--loop-radius", type=float, help="Radius of the winding loop (default: 0.1)")
    p_dirac.add_argument("--loop-samples", type=int, help="Samples on the winding loop (default: 256)")

    p_nodal: argparse.ArgumentParser = sub.add_parser("nodal", help="Nodal-line vertices")
    _add_common(p_nodal)

    p_curv: argparse.ArgumentParser = sub.add_parser("curvature", help="Berry curvature and Chern number")
    _add_common(p_curv)
    p_curv.add_argument("--curvature-grid", type=int, help="Momenta per direction (default: 101)")

    p_fin: argparse.ArgumentParser = sub.add_parser("finite", help="Finite-lattice spectrum and edge states")
    _add_common(p_fin)
    p_fin.add_argument("--cells", type=int, nargs=2, metavar=("N", "M"), help="Unit cells along x and y (default: 6 6)")
    p_fin.add_argument("--boundary", type=str, help="open (default) or periodic")
    p_fin.add_argument("--coupling", type=str, help="nearest (default) or longrange[:RC]")
    p_fin.add_argument("--report", type=str, help="midgap (default), states or summary")
    p_fin.add_argument("--dump-states", type=str, help="JSON file for |psi|^2 grids of the reported states")

    p_rib: argparse.ArgumentParser = sub.add_parser("ribbon", help="Ribbon spectrum")
    _add_common(p_rib)
    p_rib.add_argument("--orientation", type=str, help="x (x-infinite, default) or y")
    p_rib.add_argument("--width", type=int, help="Unit cells across the ribbon (default: 8)")
    p_rib.add_argument("--k-samples", type=int, help="Momenta along the ribbon (default: 256)")

    p_pd: argparse.ArgumentParser = sub.add_parser("phase-diagram", help="Scan the (beta_x, beta_y) phase diagram")
    _add_common(p_pd)
    p_pd.add_argument("--resolution", type=int, help="Points per axis (default: 61)")
    p_pd.add_argument("--beta-min", type=float, help="Lower end of both offset axes (default: 0)")
    p_pd.add_argument("--beta-max", type=float, help="Upper end of both offset axes (default: 1)")

    p_traj: argparse.ArgumentParser = sub.add_parser("trajectory", help="Track Dirac points along a straight offset path")
    _add_common(p_traj)
    p_traj.add_argument("--beta-x-end", type=float, help="Final beta_x")
    p_traj.add_argument("--beta-y-end", type=float, help="Final beta_y")
    p_traj.add_argument("--path-steps", type=int, help="Geometries along the path (default: 11)")
    p_traj.add_argument("--seed-grid", type=int, help="Seed grid for the zero search (default: 301)")

    return parser


def parse(argv: list[str] | None = None) -> RunConfig:
    """Command line (and optional config file) to a validated RunConfig.

    Raises:
        ConfigError: On invalid files or values.
    """
    args: argparse.Namespace = build_parser().parse_args(argv)
    flags: dict[str, Any] = {k: v for k, v in vars(args).items() if k not in ("command", "config", "cells")}
    if getattr(args, "cells", None) is not None:
        flags["cells_x"], flags["cells_y"] = args.cells
    file_values: dict[str, Any] = parse_config_file(args.config) if args.config else {}
    return build_run_config(args.command, file_values, flags)


def main(argv: list[str] | None = None) -> int:
    try:
        cfg: RunConfig = parse(argv)
    except ConfigError as e:
        print(f"rydssh: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[cfg.command](cfg)
    except RydSSHError as e:
        print(f"rydssh: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
