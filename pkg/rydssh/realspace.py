"""Finite Rydberg lattices: Hamiltonian assembly, exact diagonalization and
localization analysis of edge and corner states.

Site ordering: cell (n, m) with n fast, A before B, so
``site_index(s, n, m) = 2 * (m * N + n) + s`` with s = 0 for A and 1 for B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import optimize, stats

from rydssh.bloch import bands
from rydssh.errors import NumericalError
from rydssh.lattice import (
    GeometryConfig,
    HoppingSet,
    dipole_axis,
    dipole_coupling,
    hopping_set,
)
from rydssh.linalg import EigenSet, HermitianMatrix, hermitian_eig


# --- Localization thresholds ---

EDGE_TAG: float = 0.6
CORNER_TAG: float = 0.5
ZERO_ENERGY_REL: float = 1e-8
# Below this boundary weight a state is bulk
BOUNDARY_MIN: float = 0.5
DENSITY_FLOOR: float = 1e-14
DECAY_MARGIN: float = 0.05
MIN_DISTANCES: int = 3
# Corner blocks below this fraction of the heaviest block are unoccupied
OCCUPIED_CORNER: float = 0.25

# --- Model defaults ---

LONGRANGE_CUTOFF: float = 3.0
BULK_WINDOW_GRID: int = 101
MIDGAP_MARGIN: float = 1e-6
_CUTOFF_SLACK: float = 1e-9

Boundary = Literal["open", "periodic"]
CouplingModel = Literal["nearest", "longrange"]
DecayKind = Literal["exponential", "polynomial", "bulk"]


@dataclass(frozen=True)
class FiniteLatticeSpec:
    """Size, boundary and coupling model of a finite lattice.

    ``hoppings`` replaces the geometry-derived hoppings entirely; ``j2x`` and
    ``j2y`` force the intra-sublattice hoppings (the chiral limit is
    unreachable by geometry alone). Both only apply to the nearest model.
    """

    cells_x: int
    cells_y: int
    boundary: Boundary = "open"
    coupling_model: CouplingModel = "nearest"
    cutoff: float = LONGRANGE_CUTOFF
    hoppings: HoppingSet | None = None
    j2x: float | None = None
    j2y: float | None = None

    def __post_init__(self) -> None:
        if self.cells_x < 2 or self.cells_y < 2:
            raise ValueError(f"Need at least 2x2 cells, got {self.cells_x}x{self.cells_y}")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if self.coupling_model not in ("nearest", "longrange"):
            raise ValueError(f"coupling_model must be 'nearest' or 'longrange', got {self.coupling_model!r}")
        if self.coupling_model == "longrange":
            if self.cutoff < 1.0:
                raise ValueError(f"Long-range cutoff must be >= 1 (units of a), got {self.cutoff}")
            if self.hoppings is not None or self.j2x is not None or self.j2y is not None:
                raise ValueError("Hopping overrides only apply to the nearest coupling model")

    @property
    def n_sites(self) -> int:
        return 2 * self.cells_x * self.cells_y

    def site_index(self, sublattice: int, n: int, m: int) -> int:
        return 2 * (m * self.cells_x + n) + sublattice

    def effective_hoppings(self, geom: GeometryConfig) -> HoppingSet:
        h: HoppingSet = self.hoppings if self.hoppings is not None else hopping_set(geom)
        return h.with_overrides(self.j2x, self.j2y)


@dataclass(frozen=True)
class Site:
    sublattice: str
    n: int
    m: int
    x: float
    y: float


@dataclass(frozen=True)
class DecayFit:
    kind: DecayKind
    rate: float
    r2_exponential: float
    r2_polynomial: float
    points: int


@dataclass(frozen=True)
class LocalizationReport:
    """Where one eigenstate lives on the finite lattice."""

    index: int
    energy: float
    left: float
    right: float
    top: float
    bottom: float
    x_edge: float
    y_edge: float
    corner: float
    ring: float
    ipr: float
    decay: DecayFit


@dataclass(frozen=True)
class BulkWindow:
    """Energy ranges of the lower and upper Bloch bands."""

    lower: tuple[float, float]
    upper: tuple[float, float]

    def contains(self, energy: np.ndarray, margin: float = MIDGAP_MARGIN) -> np.ndarray:
        e: np.ndarray = np.asarray(energy, dtype=float)
        in_lower = (e >= self.lower[0] - margin) & (e <= self.lower[1] + margin)
        in_upper = (e >= self.upper[0] - margin) & (e <= self.upper[1] + margin)
        return in_lower | in_upper


def site_positions(spec: FiniteLatticeSpec, geom: GeometryConfig) -> list[Site]:
    """Positions of every site in index order; rows run along -y."""
    a: float = geom.a
    sites: list[Site] = []
    for m in range(spec.cells_y):
        for n in range(spec.cells_x):
            sites.append(Site("A", n, m, n * a, -m * a))
            sites.append(Site("B", n, m, n * a + geom.beta_x * a, -m * a + geom.beta_y * a))
    return sites


def _cell_bonds(h: HoppingSet) -> list[tuple[int, int, int, int, float]]:
    """(sublattice_i, sublattice_j, dn, dm, J) for bonds i(n, m) - j(n + dn, m + dm)."""
    return [
        (0, 1, 0, 0, h.jxp),
        (1, 0, 1, 0, h.jx),
        (0, 1, 0, 1, h.jyp),
        (1, 0, 1, -1, h.jy),
        (0, 0, 1, 0, h.j2x),
        (1, 1, 1, 0, h.j2x),
        (0, 0, 0, 1, h.j2y),
        (1, 1, 0, 1, h.j2y),
    ]


def _nearest_matrix(spec: FiniteLatticeSpec, h: HoppingSet) -> np.ndarray:
    n_cells, m_cells = spec.cells_x, spec.cells_y
    periodic: bool = spec.boundary == "periodic"
    mat: np.ndarray = np.zeros((spec.n_sites, spec.n_sites), dtype=complex)
    for si, sj, dn, dm, j in _cell_bonds(h):
        if j == 0.0:
            continue
        for m in range(m_cells):
            for n in range(n_cells):
                n2, m2 = n + dn, m + dm
                if periodic:
                    n2, m2 = n2 % n_cells, m2 % m_cells
                elif not (0 <= n2 < n_cells and 0 <= m2 < m_cells):
                    continue
                i: int = spec.site_index(si, n, m)
                k: int = spec.site_index(sj, n2, m2)
                # wrapped bonds on small tori can land on the same pair twice
                mat[i, k] += j
                mat[k, i] += j
    return mat


def _longrange_matrix(spec: FiniteLatticeSpec, geom: GeometryConfig) -> np.ndarray:
    sites: list[Site] = site_positions(spec, geom)
    pos: np.ndarray = np.array([[s.x, s.y] for s in sites])
    d: np.ndarray = pos[None, :, :] - pos[:, None, :]
    if spec.boundary == "periodic":
        period: np.ndarray = np.array([spec.cells_x, spec.cells_y], dtype=float) * geom.a
        d -= period * np.round(d / period)
    r: np.ndarray = np.linalg.norm(d, axis=-1)
    axis: np.ndarray = dipole_axis(geom.theta_m)
    mat: np.ndarray = np.zeros((spec.n_sites, spec.n_sites), dtype=complex)
    cutoff: float = spec.cutoff * geom.a + _CUTOFF_SLACK
    for i, k in zip(*np.nonzero(np.triu(r <= cutoff, k=1))):
        cos_t: float = float(d[i, k] @ axis) / r[i, k]
        v: float = dipole_coupling(r[i, k] / geom.a, cos_t)
        mat[i, k] += v
        mat[k, i] += v
    return mat


def build_hamiltonian(spec: FiniteLatticeSpec, geom: GeometryConfig) -> HermitianMatrix:
    """Single-excitation hopping matrix of the finite lattice.

    Raises:
        DegenerateGeometry: If two atoms coincide.
    """
    if spec.coupling_model == "longrange":
        return HermitianMatrix(_longrange_matrix(spec, geom))
    return HermitianMatrix(_nearest_matrix(spec, spec.effective_hoppings(geom)))


def spectrum(spec: FiniteLatticeSpec, geom: GeometryConfig) -> EigenSet:
    return hermitian_eig(build_hamiltonian(spec, geom))


# ---------------------------------------------------------------------------
# Localization
# ---------------------------------------------------------------------------

def state_density_grid(eigs: EigenSet, spec: FiniteLatticeSpec, index: int) -> np.ndarray:
    """|psi|^2 of one state as an array indexed [m, n, sublattice]."""
    prob: np.ndarray = np.abs(eigs.vectors[:, index]) ** 2
    return prob.reshape(spec.cells_y, spec.cells_x, 2)


def _fit_r2(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if np.ptp(x) == 0.0:
        return 0.0, 0.0
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.rvalue**2)


def classify_decay(distances: np.ndarray, density: np.ndarray) -> DecayFit:
    """Exponential vs polynomial decay of a density profile.

    Each point is one site: log density is fitted against distance and
    against log(distance + 1), and the profile is exponential unless the
    power law wins by the R^2 margin. Sites at or below the density floor
    are dropped; fewer than three distinct distances or a non-negative slope
    make the state bulk.
    """
    distances = np.asarray(distances, dtype=float).ravel()
    density = np.asarray(density, dtype=float).ravel()
    keep: np.ndarray = density > DENSITY_FLOOR
    d: np.ndarray = distances[keep]
    rho: np.ndarray = density[keep]
    points: int = int(len(d))
    if len(np.unique(d)) < MIN_DISTANCES:
        return DecayFit("bulk", 0.0, 0.0, 0.0, points)

    log_rho: np.ndarray = np.log(rho)
    slope_exp, r2_exp = _fit_r2(d, log_rho)
    _, r2_poly = _fit_r2(np.log(d + 1.0), log_rho)
    if slope_exp >= 0.0:
        return DecayFit("bulk", 0.0, r2_exp, r2_poly, points)
    kind: DecayKind = "polynomial" if r2_poly > r2_exp + DECAY_MARGIN else "exponential"
    return DecayFit(kind, -slope_exp, r2_exp, r2_poly, points)


def _corner_distance(cells: np.ndarray) -> np.ndarray:
    """Chebyshev cell distance to the nearest occupied corner.

    A corner is occupied when its 2x2-cell block holds at least
    ``OCCUPIED_CORNER`` of the heaviest block's weight.
    """
    m_cells, n_cells = cells.shape
    m_idx, n_idx = np.meshgrid(np.arange(m_cells), np.arange(n_cells), indexing="ij")
    corners: list[tuple[int, int]] = [(0, 0), (0, n_cells - 1), (m_cells - 1, 0), (m_cells - 1, n_cells - 1)]
    dists: list[np.ndarray] = [np.maximum(np.abs(m_idx - cm), np.abs(n_idx - cn)) for cm, cn in corners]
    weights: np.ndarray = np.array([cells[dist < 2].sum() for dist in dists])
    occupied: np.ndarray = weights >= OCCUPIED_CORNER * weights.max()
    return np.min([dist for dist, occ in zip(dists, occupied) if occ], axis=0)


def _boundary_distances(n_cells: int, m_cells: int) -> tuple[np.ndarray, np.ndarray]:
    m_idx, n_idx = np.meshgrid(np.arange(m_cells), np.arange(n_cells), indexing="ij")
    dx: np.ndarray = np.minimum(n_idx, n_cells - 1 - n_idx)
    dy: np.ndarray = np.minimum(m_idx, m_cells - 1 - m_idx)
    return dx, dy


def localization_report(
    eigs: EigenSet,
    spec: FiniteLatticeSpec,
    indices: list[int] | None = None,
) -> list[LocalizationReport]:
    """Boundary weights, IPR and decay class for each requested state.

    x-edges are the outermost unit-cell columns, y-edges the outermost rows,
    the corner region the four 2x2-cell blocks. The decay fit runs over
    individual sites against the distance to the relevant boundary: the
    nearest occupied corner when both edge weights reach 0.5, otherwise the
    heavier edge.
    """
    n_cells, m_cells = spec.cells_x, spec.cells_y
    dx, dy = _boundary_distances(n_cells, m_cells)
    corner_mask: np.ndarray = (dx < 2) & (dy < 2)
    ring_mask: np.ndarray = (dx == 0) | (dy == 0)
    chosen: list[int] = list(range(len(eigs))) if indices is None else list(indices)

    reports: list[LocalizationReport] = []
    for idx in chosen:
        prob: np.ndarray = np.abs(eigs.vectors[:, idx]) ** 2
        cells: np.ndarray = prob.reshape(m_cells, n_cells, 2).sum(axis=-1)
        left: float = float(cells[:, 0].sum())
        right: float = float(cells[:, -1].sum())
        top: float = float(cells[0, :].sum())
        bottom: float = float(cells[-1, :].sum())
        x_edge: float = float(cells[dx == 0].sum())
        y_edge: float = float(cells[dy == 0].sum())
        corner: float = float(cells[corner_mask].sum())

        if x_edge >= BOUNDARY_MIN and y_edge >= BOUNDARY_MIN:
            weight, dist = corner, _corner_distance(cells)
        elif y_edge >= x_edge:
            weight, dist = y_edge, dy
        else:
            weight, dist = x_edge, dx
        if weight < BOUNDARY_MIN:
            decay: DecayFit = DecayFit("bulk", 0.0, 0.0, 0.0, 0)
        else:
            site_density: np.ndarray = prob.reshape(m_cells, n_cells, 2)
            site_dist: np.ndarray = np.broadcast_to(dist[..., None], site_density.shape)
            decay = classify_decay(site_dist, site_density)

        reports.append(
            LocalizationReport(
                index=idx,
                energy=float(eigs.values[idx]),
                left=left,
                right=right,
                top=top,
                bottom=bottom,
                x_edge=x_edge,
                y_edge=y_edge,
                corner=corner,
                ring=float(cells[ring_mask].sum()),
                ipr=float(np.sum(prob**2)),
                decay=decay,
            )
        )
    return reports


def zero_modes(eigs: EigenSet, h: HermitianMatrix, rel_tol: float = ZERO_ENERGY_REL) -> np.ndarray:
    """Indices of states with |E| < rel_tol * ||H||."""
    return np.flatnonzero(np.abs(eigs.values) < rel_tol * h.norm)


# ---------------------------------------------------------------------------
# Bulk window and mid-gap states
# ---------------------------------------------------------------------------

def _polish_extremum(h: HoppingSet, band: int, sign: float, k0: np.ndarray) -> float:
    def energy(k: np.ndarray) -> float:
        b = bands(h, k[0], k[1])
        return sign * float(b.e_plus if band else b.e_minus)

    res = optimize.minimize(energy, k0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
    return sign * min(float(res.fun), energy(k0))


def bulk_window(h: HoppingSet, grid: int = BULK_WINDOW_GRID) -> BulkWindow:
    """Ranges of both Bloch bands: grid search including the zone boundary, then local polishing."""
    k: np.ndarray = np.linspace(-math.pi, math.pi, grid)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    b = bands(h, kx, ky)
    limits: list[float] = []
    for band, values in ((0, b.e_minus), (1, b.e_plus)):
        for sign in (1.0, -1.0):
            flat: int = int(np.argmin(sign * values))
            k0: np.ndarray = np.array([kx.flat[flat], ky.flat[flat]])
            limits.append(_polish_extremum(h, band, sign, k0))
    return BulkWindow(lower=(limits[0], limits[1]), upper=(limits[2], limits[3]))


def midgap_filter(eigs: EigenSet, window: BulkWindow, margin: float = MIDGAP_MARGIN) -> np.ndarray:
    """Indices of eigenvalues outside both bulk bands."""
    return np.flatnonzero(~window.contains(eigs.values, margin))


def midgap_states(
    spec: FiniteLatticeSpec,
    geom: GeometryConfig,
    eigs: EigenSet | None = None,
) -> tuple[EigenSet, list[LocalizationReport]]:
    """Diagonalize (unless given) and report only the mid-gap states."""
    if eigs is None:
        eigs = spectrum(spec, geom)
    if spec.coupling_model != "nearest":
        raise NumericalError("The bulk window is only defined for the nearest coupling model")
    window: BulkWindow = bulk_window(spec.effective_hoppings(geom))
    return eigs, localization_report(eigs, spec, [int(i) for i in midgap_filter(eigs, window)])
