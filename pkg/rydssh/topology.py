"""Topological invariants and gapless-phase characterization.

Gapped phases are labeled by the 2D Zak phase, computed as the circular mean
of 1D Wilson-loop (Berry) phases over lines of the zone. Gapless phases are
characterized by the zeros of n(k): isolated Dirac points with a winding
charge and a tilted anisotropic cone, or nodal lines at the mirror-symmetric
offset. Berry curvature uses the plaquette link-variable method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import Pool, cpu_count
from typing import Literal

import contourpy
import numpy as np
from scipy import stats
from tqdm import tqdm

from rydssh.bloch import (
    Momentum,
    bands,
    diagonal_gradient,
    fold,
    lower_band_state,
    momentum_grid,
    newton_refine,
    off_diagonal,
    off_diagonal_gradient,
    periodic_distance,
)
from rydssh.errors import (
    DegenerateCone,
    DegeneratePoint,
    FitFailure,
    LoopThroughNode,
    NonInteger,
    NonQuantized,
    NotGapped,
)
from rydssh.lattice import GeometryConfig, HoppingSet, hopping_set


# --- Defaults ---

ZAK_LINES: int = 201
ZAK_STEPS: int = 401
MIN_LINE_STEPS: int = 64
SEED_GRID: int = 301
LOOP_RADIUS: float = 0.1
LOOP_SAMPLES: int = 256
NODAL_GRID: int = 301
CURVATURE_GRID: int = 101

# --- Tolerances ---

LINE_GAP_MIN: float = 1e-9
ZAK_SPREAD_TOL: float = 0.01 * math.pi
ROOT_TOL: float = 1e-10
DEDUP_DIST: float = 1e-6
WINDING_RESIDUAL_TOL: float = 1e-3
CONE_SIGMA_MIN: float = 1e-9
FIT_R2_MIN: float = 0.99
# More isolated zeros than this, spread over more than NODAL_EXTENT rad, means a nodal set
MAX_ISOLATED_ZEROS: int = 8
NODAL_EXTENT: float = 0.5
MIRROR_TOL: float = 1e-12
_PROJECTION_STEPS: int = 12

Direction = Literal["x", "y"]


@dataclass
class ZakVector:
    """2D Zak phase with the per-line phases it was averaged from."""

    zx: float
    zy: float
    x_phases: np.ndarray
    y_phases: np.ndarray
    x_std: float
    y_std: float

    @property
    def per_line_std(self) -> float:
        return max(self.x_std, self.y_std)

    def is_pi(self, tol: float = 0.05 * math.pi) -> tuple[bool, bool]:
        """Whether each component sits at pi (mod 2pi) within tol."""
        return (
            abs(abs(self.zx) - math.pi) <= tol,
            abs(abs(self.zy) - math.pi) <= tol,
        )


@dataclass(frozen=True)
class DiracPoint:
    k: Momentum
    charge: int
    tilt: tuple[float, float]
    velocities: tuple[float, float]
    anisotropy: float


@dataclass(frozen=True)
class ConeGeometry:
    """Local cone model E_pm(kD + q) - n0(kD) = q.tilt +- |G q|."""

    tilt: np.ndarray
    velocities: np.ndarray
    anisotropy: float
    velocity_matrix: np.ndarray


@dataclass
class ZeroSearch:
    """Refined zeros of n(k); ``extended`` marks a nodal (non-isolated) zero set."""

    points: list[Momentum]
    extended: bool
    extent: float


@dataclass
class NodalSet:
    polylines: list[np.ndarray] = field(default_factory=list)

    @property
    def vertices(self) -> np.ndarray:
        if not self.polylines:
            return np.empty((0, 2))
        return np.concatenate(self.polylines, axis=0)

    def __bool__(self) -> bool:
        return any(len(p) for p in self.polylines)


@dataclass
class CurvatureMap:
    plaquettes: np.ndarray
    chern: int

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.plaquettes)))


def _wrap_phase(phi: np.ndarray | float) -> np.ndarray | float:
    """Canonical representative in (-pi, pi]; values within 1e-9 of -pi map to pi."""
    w = fold(phi)
    w = np.where(np.asarray(w) <= -math.pi + 1e-9, math.pi, w)
    return float(w) if np.ndim(w) == 0 else w


# ---------------------------------------------------------------------------
# Wilson loops and the 2D Zak phase
# ---------------------------------------------------------------------------

def _line_momenta(direction: Direction, transverse: np.ndarray, steps: int) -> tuple[np.ndarray, np.ndarray]:
    along: np.ndarray = -math.pi + 2.0 * math.pi * np.arange(steps) / steps
    t_grid, a_grid = np.meshgrid(np.asarray(transverse, dtype=float), along, indexing="ij")
    if direction == "x":
        return a_grid, t_grid
    if direction == "y":
        return t_grid, a_grid
    raise ValueError(f"direction must be 'x' or 'y', got {direction!r}")


def wilson_line_phases(h: HoppingSet, direction: Direction, transverse: np.ndarray, steps: int = ZAK_STEPS) -> np.ndarray:
    """Berry phases of closed lines across the zone, one per transverse momentum.

    Raises:
        DegeneratePoint: If any sampled gap is below 1e-9.
    """
    if steps < MIN_LINE_STEPS:
        raise ValueError(f"steps must be >= {MIN_LINE_STEPS}, got {steps}")
    kx, ky = _line_momenta(direction, transverse, steps)
    gaps = bands(h, kx, ky).gap
    if np.min(gaps) < LINE_GAP_MIN:
        i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
        raise DegeneratePoint(
            f"Gap {gaps[i, j]:.3e} below {LINE_GAP_MIN:g} on the {direction}-line at k=({kx[i, j]:.6f}, {ky[i, j]:.6f})"
        )
    u: np.ndarray = lower_band_state(h, kx, ky)
    links: np.ndarray = np.sum(np.conj(u) * np.roll(u, -1, axis=1), axis=-1)
    # product of unit-normalized links; phase is exactly the sum of link phases
    total: np.ndarray = np.sum(np.angle(links), axis=1)
    return np.asarray(_wrap_phase(-total))


def line_berry_phase(
    h: HoppingSet,
    direction: Direction,
    transverse_k: float,
    steps: int = ZAK_STEPS,
) -> float:
    """Berry phase of the lower band along one closed line at fixed transverse momentum."""
    return float(wilson_line_phases(h, direction, np.array([transverse_k]), steps)[0])


def _circular_stats(phases: np.ndarray) -> tuple[float, float]:
    mean: float = float(np.angle(np.mean(np.exp(1j * phases))))
    spread: float = float(np.std(fold(phases - mean)))
    return float(_wrap_phase(mean)), spread


def zak_vector(h: HoppingSet, lines: int = ZAK_LINES, steps: int = ZAK_STEPS) -> ZakVector:
    """2D Zak phase (Z_x, Z_y) as circular means of x- and y-line Berry phases.

    Raises:
        NotGapped: If a sampled line crosses a band touching.
        NonQuantized: If the per-line phases scatter by more than 0.01 pi or
            a mean is not within 0.01 pi of 0 or pi.
    """
    transverse: np.ndarray = momentum_grid(lines)
    try:
        x_phases: np.ndarray = wilson_line_phases(h, "x", transverse, steps)
        y_phases: np.ndarray = wilson_line_phases(h, "y", transverse, steps)
    except DegeneratePoint as e:
        raise NotGapped(f"Zak phase undefined: {e}") from e

    zx, x_std = _circular_stats(x_phases)
    zy, y_std = _circular_stats(y_phases)
    zak: ZakVector = ZakVector(zx=zx, zy=zy, x_phases=x_phases, y_phases=y_phases, x_std=x_std, y_std=y_std)

    if max(x_std, y_std) > ZAK_SPREAD_TOL:
        raise NonQuantized(
            f"Per-line Berry phases not constant: std x={x_std / math.pi:.4f} pi, y={y_std / math.pi:.4f} pi"
        )
    for name, z in (("zx", zx), ("zy", zy)):
        if min(abs(z), abs(abs(z) - math.pi)) > ZAK_SPREAD_TOL:
            raise NonQuantized(f"{name}={z / math.pi:.4f} pi is not 0 or pi")
    return zak


# ---------------------------------------------------------------------------
# Dirac points
# ---------------------------------------------------------------------------

def _dedup(points: np.ndarray, min_dist: float = DEDUP_DIST) -> np.ndarray:
    order: np.ndarray = np.lexsort((points[:, 1], points[:, 0]))
    kept: list[np.ndarray] = []
    for p in points[order]:
        if kept and np.min(periodic_distance(np.array(kept), p)) < min_dist:
            continue
        kept.append(p)
    return np.array(kept).reshape(-1, 2)


def locate_dirac_points(h: HoppingSet, seed_grid: int = SEED_GRID) -> ZeroSearch:
    """Refined zeros of n(k) seeded from every grid point close enough to a zero.

    A zero lies within half a grid diagonal of some grid point, where |n| is
    then at most (|jxp| + |jyp| + |jx| + |jy|) * grid spacing; every such point
    seeds a Newton refinement.
    """
    k: np.ndarray = momentum_grid(seed_grid)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    abs_n: np.ndarray = np.abs(off_diagonal(h, kx, ky))
    spacing: float = 2.0 * math.pi / seed_grid
    threshold: float = (abs(h.jxp) + abs(h.jyp) + abs(h.jx) + abs(h.jy)) * spacing
    seeds: np.ndarray = abs_n < threshold
    if not np.any(seeds):
        return ZeroSearch(points=[], extended=False, extent=0.0)

    rkx, rky, rabs = newton_refine(h, kx[seeds], ky[seeds])
    converged: np.ndarray = rabs < ROOT_TOL
    if not np.any(converged):
        return ZeroSearch(points=[], extended=False, extent=0.0)

    roots: np.ndarray = _dedup(np.stack([rkx[converged], rky[converged]], axis=-1))
    extent: float = 0.0
    if len(roots) > 1:
        extent = float(max(np.max(periodic_distance(roots, p)) for p in roots))
    extended: bool = len(roots) > MAX_ISOLATED_ZEROS and extent > NODAL_EXTENT
    points: list[Momentum] = [Momentum(p[0], p[1]) for p in roots]
    return ZeroSearch(points=points, extended=extended, extent=extent)


def dirac_charge(
    h: HoppingSet,
    center: Momentum,
    radius: float = LOOP_RADIUS,
    samples: int = LOOP_SAMPLES,
) -> int:
    """Winding number of n(k) around a circle centred on ``center``.

    Raises:
        LoopThroughNode: If |n| drops below 1e-9 on the loop.
        NonInteger: If the winding is more than 1e-3 from an integer.
    """
    if samples < MIN_LINE_STEPS:
        raise ValueError(f"samples must be >= {MIN_LINE_STEPS}, got {samples}")
    t: np.ndarray = 2.0 * math.pi * np.arange(samples) / samples
    n: np.ndarray = off_diagonal(h, center.kx + radius * np.cos(t), center.ky + radius * np.sin(t))
    if np.min(np.abs(n)) < LINE_GAP_MIN:
        raise LoopThroughNode(f"|n| = {np.min(np.abs(n)):.3e} on the loop of radius {radius} around {center}")
    winding: float = float(np.sum(np.angle(np.roll(n, -1) / n))) / (2.0 * math.pi)
    charge: int = int(round(winding))
    if abs(winding - charge) > WINDING_RESIDUAL_TOL:
        raise NonInteger(f"Winding {winding:.6f} is not an integer (increase samples)")
    return charge


def characterize_cone(h: HoppingSet, k_d: Momentum) -> ConeGeometry:
    """Tilt (grad n0), velocity singular values and anisotropy of a Dirac cone.

    Raises:
        DegenerateCone: If the smaller velocity is below 1e-9 (a merging point).
    """
    tx, ty = diagonal_gradient(h, k_d.kx, k_d.ky)
    dnx, dny = off_diagonal_gradient(h, k_d.kx, k_d.ky)
    g: np.ndarray = np.array([[dnx.real, dny.real], [dnx.imag, dny.imag]], dtype=float)
    sigma: np.ndarray = np.linalg.svd(g, compute_uv=False)
    if sigma[-1] < CONE_SIGMA_MIN:
        raise DegenerateCone(
            f"Cone at {k_d} has a vanishing velocity ({sigma[-1]:.3e}); use merging_exponents"
        )
    return ConeGeometry(
        tilt=np.array([float(tx), float(ty)]),
        velocities=sigma,
        anisotropy=float(sigma[0] / sigma[1]),
        velocity_matrix=g,
    )


def cone_model(cone: ConeGeometry, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linearized (E_minus, E_plus) relative to n0(kD) at displacements q, shape (..., 2)."""
    q = np.asarray(q, dtype=float)
    drift: np.ndarray = q @ cone.tilt
    split: np.ndarray = np.linalg.norm(q @ cone.velocity_matrix.T, axis=-1)
    return drift - split, drift + split


def dirac_points(
    h: HoppingSet,
    seed_grid: int = SEED_GRID,
    loop_radius: float = LOOP_RADIUS,
    loop_samples: int = LOOP_SAMPLES,
) -> list[DiracPoint]:
    """Located isolated Dirac points with charge and cone geometry.

    The winding loop has radius loop_radius, shrunk below 0.4 of the distance
    to the nearest other point.

    Raises:
        NotGapped: If the zero set is extended (nodal lines) rather than isolated.
    """
    search: ZeroSearch = locate_dirac_points(h, seed_grid)
    if search.extended:
        raise NotGapped("Zero set of n(k) is extended (nodal lines); no isolated Dirac points")
    out: list[DiracPoint] = []
    for i, p in enumerate(search.points):
        others: list[float] = [periodic_distance(p.as_array(), q.as_array()) for j, q in enumerate(search.points) if j != i]
        radius: float = min([loop_radius] + [0.4 * d for d in others])
        charge: int = dirac_charge(h, p, radius=radius, samples=loop_samples)
        cone: ConeGeometry = characterize_cone(h, p)
        out.append(
            DiracPoint(
                k=p,
                charge=charge,
                tilt=(float(cone.tilt[0]), float(cone.tilt[1])),
                velocities=(float(cone.velocities[0]), float(cone.velocities[1])),
                anisotropy=cone.anisotropy,
            )
        )
    return out


def merging_exponents(
    h: HoppingSet,
    k_merge: Momentum,
    t_min: float = 1e-4,
    t_max: float = 1e-2,
    samples: int = 21,
) -> tuple[float, float]:
    """Dispersion exponents of the gap along the two principal directions at a zero.

    Directions are the right singular vectors of the velocity matrix: the
    first (largest velocity) is the linear direction, the second the direction
    that goes quadratic at a merging point.

    Raises:
        FitFailure: If either log-log fit has R^2 < 0.99.
    """
    dnx, dny = off_diagonal_gradient(h, k_merge.kx, k_merge.ky)
    g: np.ndarray = np.array([[dnx.real, dny.real], [dnx.imag, dny.imag]], dtype=float)
    _, _, vt = np.linalg.svd(g)
    t: np.ndarray = np.logspace(math.log10(t_min), math.log10(t_max), samples)

    exponents: list[float] = []
    for direction in vt:
        gaps = bands(h, k_merge.kx + t * direction[0], k_merge.ky + t * direction[1]).gap
        if np.any(gaps <= 0.0):
            raise FitFailure(f"Gap vanishes along direction {direction} from {k_merge}")
        fit = stats.linregress(np.log(t), np.log(gaps))
        r2: float = float(fit.rvalue**2)
        if r2 < FIT_R2_MIN:
            raise FitFailure(f"Log-log fit along {direction} has R^2={r2:.4f} < {FIT_R2_MIN}")
        exponents.append(float(fit.slope))
    return exponents[0], exponents[1]


# ---------------------------------------------------------------------------
# Nodal lines
# ---------------------------------------------------------------------------

def is_mirror_symmetric(h: HoppingSet, tol: float = MIRROR_TOL) -> bool:
    """jx == jyp and jxp == jy (the b_x = b_y = a/2 point)."""
    scale: float = max(1.0, h.max_abs)
    return abs(h.jx - h.jyp) <= tol * scale and abs(h.jxp - h.jy) <= tol * scale


def mirror_bracket(h: HoppingSet, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
    """Real factor B(k) with |n(k)| = 2|B(k)| at the mirror point."""
    return h.jxp * np.cos((kx - ky) / 2.0) + h.jx * np.cos((kx + ky) / 2.0)


def _mirror_bracket_gradient(h: HoppingSet, kx: np.ndarray, ky: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    su: np.ndarray = np.sin((kx - ky) / 2.0)
    sv: np.ndarray = np.sin((kx + ky) / 2.0)
    return -0.5 * h.jxp * su - 0.5 * h.jx * sv, 0.5 * h.jxp * su - 0.5 * h.jx * sv


def trace_nodal_lines(h: HoppingSet, grid: int = NODAL_GRID, tol: float = 1e-6) -> NodalSet:
    """Polylines of the band-touching set.

    At the mirror point the zero set is the B(k) = 0 contour: marching squares
    on B, then every vertex is projected onto B = 0 along grad B. Elsewhere
    isolated zeros are returned as single-vertex polylines; an extended zero
    set is traced as the gap = tol contour, whose vertices bound the touching
    set to within tol.
    """
    k: np.ndarray = np.linspace(-math.pi, math.pi, grid)
    kx, ky = np.meshgrid(k, k, indexing="xy")
    if not is_mirror_symmetric(h):
        search: ZeroSearch = locate_dirac_points(h, grid)
        if not search.extended:
            lines: list[np.ndarray] = [
                p.as_array()[None, :] for p in search.points if bands(h, p.kx, p.ky).gap < tol
            ]
            return NodalSet(polylines=lines)
        gap_gen = contourpy.contour_generator(k, k, bands(h, kx, ky).gap, line_type="Separate")
        return NodalSet(polylines=[np.asarray(line, dtype=float) for line in gap_gen.lines(tol) if len(line)])

    gen = contourpy.contour_generator(k, k, mirror_bracket(h, kx, ky), line_type="Separate")
    polylines: list[np.ndarray] = []
    for line in gen.lines(0.0):
        px: np.ndarray = np.array(line[:, 0], dtype=float)
        py: np.ndarray = np.array(line[:, 1], dtype=float)
        for _ in range(_PROJECTION_STEPS):
            b: np.ndarray = mirror_bracket(h, px, py)
            gx, gy = _mirror_bracket_gradient(h, px, py)
            norm2: np.ndarray = np.maximum(gx**2 + gy**2, 1e-300)
            px = px - b * gx / norm2
            py = py - b * gy / norm2
        keep: np.ndarray = bands(h, px, py).gap < tol
        if np.count_nonzero(keep):
            polylines.append(np.stack([fold(px[keep]), fold(py[keep])], axis=-1))
    return NodalSet(polylines=polylines)


# ---------------------------------------------------------------------------
# Berry curvature
# ---------------------------------------------------------------------------

def plaquette_phases(states: np.ndarray) -> np.ndarray:
    """Berry phase of every plaquette of a closed (N, N, dim) grid of states."""
    def link(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        ov: np.ndarray = np.sum(np.conj(a) * b, axis=-1)
        return ov / np.abs(ov)

    u00: np.ndarray = states[:-1, :-1]
    u10: np.ndarray = states[1:, :-1]
    u11: np.ndarray = states[1:, 1:]
    u01: np.ndarray = states[:-1, 1:]
    loop: np.ndarray = link(u00, u10) * link(u10, u11) * link(u11, u01) * link(u01, u00)
    return np.asarray(_wrap_phase(np.angle(loop)))


def berry_curvature_map(h: HoppingSet, grid: int = CURVATURE_GRID) -> CurvatureMap:
    """Plaquette Berry phases of the lower band and the Chern number.

    Raises:
        DegeneratePoint: If the gap at any grid point is below 1e-9.
    """
    k: np.ndarray = np.linspace(-math.pi, math.pi, grid)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    gaps = bands(h, kx, ky).gap
    if np.min(gaps) < LINE_GAP_MIN:
        i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
        raise DegeneratePoint(f"Gap {gaps[i, j]:.3e} at k=({kx[i, j]:.6f}, {ky[i, j]:.6f}); curvature undefined")
    phases: np.ndarray = plaquette_phases(lower_band_state(h, kx, ky))
    return CurvatureMap(plaquettes=phases, chern=int(round(float(np.sum(phases)) / (2.0 * math.pi))))


# ---------------------------------------------------------------------------
# Dirac-pair trajectories
# ---------------------------------------------------------------------------

def _dirac_step_worker(args: tuple[GeometryConfig, int]) -> list[DiracPoint]:
    geom, seed_grid = args
    h: HoppingSet = hopping_set(geom)
    search: ZeroSearch = locate_dirac_points(h, seed_grid)
    if search.extended:
        return []
    return dirac_points(h, seed_grid)


def track_dirac_points(
    path: list[GeometryConfig],
    seed_grid: int = SEED_GRID,
    workers: int | None = 1,
    quiet: bool = False,
) -> list[list[DiracPoint]]:
    """Dirac points along a path of geometries, ordered so each track is continuous.

    Points at step t are matched to step t-1 by minimal total distance on the
    torus; steps outside the semimetal contribute empty lists.
    """
    n_workers: int = workers if workers else max(1, cpu_count() - 1)
    args: list[tuple[GeometryConfig, int]] = [(g, seed_grid) for g in path]
    raw: list[list[DiracPoint]] = []
    if n_workers > 1:
        with Pool(processes=n_workers) as pool:
            for pts in tqdm(pool.imap(_dirac_step_worker, args), total=len(args), desc="Tracking Dirac points", disable=quiet):
                raw.append(pts)
    else:
        for a in tqdm(args, desc="Tracking Dirac points", disable=quiet):
            raw.append(_dirac_step_worker(a))

    tracks: list[list[DiracPoint]] = []
    prev: list[DiracPoint] = []
    for pts in raw:
        if prev and len(pts) == len(prev) == 2:
            straight: float = sum(periodic_distance(a.k.as_array(), b.k.as_array()) for a, b in zip(prev, pts))
            crossed: float = sum(periodic_distance(a.k.as_array(), b.k.as_array()) for a, b in zip(prev, pts[::-1]))
            if crossed < straight:
                pts = pts[::-1]
        tracks.append(pts)
        if pts:
            prev = pts
    return tracks
