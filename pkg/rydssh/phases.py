"""Phase classification of lattice geometries and (beta_x, beta_y) scans."""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass
from enum import Enum
from multiprocessing import Pool, cpu_count

import numpy as np
from scipy import optimize
from tqdm import tqdm

from rydssh.bloch import GapScan, gap_scan, high_symmetry_sum
from rydssh.errors import NonQuantized, NotGapped, NumericalError, RydSSHError
from rydssh.lattice import MAGIC_ANGLE, GeometryConfig, HoppingSet, hopping_set, validate
from rydssh.topology import ZakVector, ZeroSearch, locate_dirac_points, zak_vector


# --- Classification defaults ---

GAP_TOL: float = 1e-6
# Gaps within this factor above GAP_TOL are labeled BOUNDARY
BOUNDARY_DECADE: float = 10.0
CLASSIFY_GRID: int = 301
# Per-line Berry phases are constant in a gapped phase; a coarse set of lines labels it
CLASSIFY_ZAK_LINES: int = 21
PI_TOL: float = 0.05 * math.pi
MIN_RESOLUTION: int = 11


class PhaseLabel(str, Enum):
    NT = "NT"
    TX = "TX"
    TY = "TY"
    TXY = "TXY"
    SM = "SM"
    NLSM = "NLSM"
    BOUNDARY = "BOUNDARY"

    def swapped(self) -> PhaseLabel:
        """Label under the x <-> y exchange."""
        return {PhaseLabel.TX: PhaseLabel.TY, PhaseLabel.TY: PhaseLabel.TX}.get(self, self)


_ZAK_LABELS: dict[tuple[bool, bool], PhaseLabel] = {
    (False, False): PhaseLabel.NT,
    (True, False): PhaseLabel.TX,
    (False, True): PhaseLabel.TY,
    (True, True): PhaseLabel.TXY,
}


@dataclass
class PhasePoint:
    beta_x: float
    beta_y: float
    theta_m: float
    min_gap: float
    label: PhaseLabel
    zx: float | None = None
    zy: float | None = None
    n_dirac: int = 0
    error: str | None = None

    def as_row(self) -> dict[str, object]:
        row: dict[str, object] = asdict(self)
        row["label"] = self.label.value
        return row


def _is_pi(z: float) -> bool:
    return abs(abs(z) - math.pi) <= PI_TOL


def classify(geom: GeometryConfig, gap_tol: float = GAP_TOL, grid: int = CLASSIFY_GRID) -> PhasePoint:
    """Label one geometry.

    Refined minimum gap below gap_tol: an isolated pair of zeros is SM, an
    extended zero set NLSM, anything else BOUNDARY. Gaps within one decade
    above gap_tol are BOUNDARY. Otherwise the Zak phase picks NT/TX/TY/TXY.
    """
    problems: list[RydSSHError] = validate(geom)
    if problems:
        raise problems[0]
    h: HoppingSet = hopping_set(geom)
    scan: GapScan = gap_scan(h, grid)
    point: PhasePoint = PhasePoint(geom.beta_x, geom.beta_y, geom.theta_m, scan.min_gap, PhaseLabel.BOUNDARY)

    if scan.min_gap < gap_tol:
        search: ZeroSearch = locate_dirac_points(h, grid)
        point.n_dirac = len(search.points)
        if search.extended:
            point.label = PhaseLabel.NLSM
        elif len(search.points) == 2:
            point.label = PhaseLabel.SM
        else:
            point.error = f"{len(search.points)} isolated zeros at the gap closing"
        return point
    if scan.min_gap <= BOUNDARY_DECADE * gap_tol:
        point.error = f"Gap {scan.min_gap:.3e} within a decade of gap_tol"
        return point

    try:
        zak: ZakVector = zak_vector(h, lines=CLASSIFY_ZAK_LINES)
    except (NonQuantized, NotGapped) as e:
        point.error = str(e)
        return point
    point.zx, point.zy = zak.zx, zak.zy
    point.label = _ZAK_LABELS[(_is_pi(zak.zx), _is_pi(zak.zy))]
    return point


def _classify_worker(args: tuple[float, float, float, float, int]) -> PhasePoint:
    beta_x, beta_y, theta_m, gap_tol, grid = args
    geom: GeometryConfig = GeometryConfig(beta_x, beta_y, theta_m)
    try:
        return classify(geom, gap_tol, grid)
    except RydSSHError as e:
        return PhasePoint(beta_x, beta_y, theta_m, float("nan"), PhaseLabel.BOUNDARY, error=str(e))


def scan_grid(resolution: int, beta_range: tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    lo, hi = beta_range
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"beta_range must satisfy 0 <= lo < hi <= 1, got {beta_range}")
    return np.linspace(lo, hi, resolution)


def scan(
    resolution: int,
    theta_m: float = MAGIC_ANGLE,
    beta_range: tuple[float, float] = (0.0, 1.0),
    gap_tol: float = GAP_TOL,
    grid: int = CLASSIFY_GRID,
    workers: int | None = None,
    quiet: bool = False,
) -> list[PhasePoint]:
    """Classify every point of a uniform (beta_x, beta_y) grid, beta_y running fastest.

    Geometries with coincident atoms (the square's corners) are skipped.
    Per-point failures are recorded on the point and the scan continues.
    """
    betas: np.ndarray = scan_grid(resolution, beta_range)
    args: list[tuple[float, float, float, float, int]] = []
    for bx in betas:
        for by in betas:
            if validate(GeometryConfig(float(bx), float(by), theta_m)):
                continue
            args.append((float(bx), float(by), theta_m, gap_tol, grid))

    n_workers: int = workers if workers else max(1, cpu_count() - 1)
    if not quiet:
        print(f"  Classifying {len(args)} points with {n_workers} workers", file=sys.stderr)

    points: list[PhasePoint] = []
    if n_workers > 1:
        with Pool(processes=n_workers) as pool:
            for p in tqdm(pool.imap(_classify_worker, args), total=len(args), desc="Phase scan", disable=quiet):
                points.append(p)
    else:
        for a in tqdm(args, desc="Phase scan", disable=quiet):
            points.append(_classify_worker(a))

    if not quiet:
        counts: dict[str, int] = {}
        for p in points:
            counts[p.label.value] = counts.get(p.label.value, 0) + 1
        summary: str = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
        print(f"  Done. {summary}", file=sys.stderr)
    return points


def locate_closing(start: GeometryConfig, end: GeometryConfig, point: str = "G", xtol: float = 1e-14) -> GeometryConfig:
    """Geometry on the straight segment start -> end where the gap closes at a high-symmetry point.

    Raises:
        NumericalError: If the signed hopping sum for ``point`` does not change sign along the segment.
    """

    def at(t: float) -> GeometryConfig:
        return GeometryConfig(
            start.beta_x + t * (end.beta_x - start.beta_x),
            start.beta_y + t * (end.beta_y - start.beta_y),
            start.theta_m + t * (end.theta_m - start.theta_m),
            start.a,
        )

    def signed(t: float) -> float:
        return high_symmetry_sum(hopping_set(at(t)), point)

    f0, f1 = signed(0.0), signed(1.0)
    if f0 * f1 > 0.0:
        raise NumericalError(f"No gap closing at {point} between {start} and {end}: signed sums {f0:.4g}, {f1:.4g}")
    t_star: float = optimize.brentq(signed, 0.0, 1.0, xtol=xtol)
    return at(t_star)
