"""Momentum-space Hamiltonian, bands, gap maps and symmetry checks.

    h(k) = [[n0(k), n(k)], [conj(n(k)), n0(k)]]
    n(k)  = J_x' + J_y' e^{i ky} + J_x e^{-i kx} + J_y e^{-i (kx - ky)}
    n0(k) = 2 (J_2x cos kx + J_2y cos ky)

All functions broadcast over numpy arrays of kx, ky.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from rydssh.errors import DegeneratePoint
from rydssh.lattice import HoppingSet


# --- Constants ---

HIGH_SYMMETRY_POINTS: dict[str, tuple[float, float]] = {
    "G": (0.0, 0.0),
    "X": (math.pi, 0.0),
    "Y": (0.0, math.pi),
    "M": (math.pi, math.pi),
}
# Signs multiplying (jxp, jyp, jx, jy) in n(k) at each high-symmetry point
_HIGH_SYMMETRY_SIGNS: dict[str, tuple[int, int, int, int]] = {
    "G": (1, 1, 1, 1),
    "X": (1, 1, -1, -1),
    "Y": (1, -1, 1, -1),
    "M": (1, -1, -1, 1),
}
BAND_PATH: tuple[str, ...] = ("G", "X", "M", "G", "Y")

DEGENERATE_GAP: float = 1e-12
NEWTON_MAX_ITER: int = 50
NEWTON_TOL: float = 1e-12
# Largest Newton step (radians) before the step is scaled down
_NEWTON_MAX_STEP: float = 0.5
MIN_GRID: int = 16

SIGMA_X: np.ndarray = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z: np.ndarray = np.array([[1, 0], [0, -1]], dtype=complex)


def fold(k: ArrayLike) -> np.ndarray | float:
    """Map momenta into the canonical zone (-pi, pi]."""
    folded = math.pi - np.mod(math.pi - np.asarray(k, dtype=float), 2.0 * math.pi)
    return float(folded) if np.ndim(folded) == 0 else folded


def periodic_distance(k1: ArrayLike, k2: ArrayLike) -> np.ndarray | float:
    """Distance between momenta on the torus."""
    d: np.ndarray = np.abs(fold(np.asarray(k1, dtype=float) - np.asarray(k2, dtype=float)))
    out = np.sqrt(np.sum(d**2, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Momentum:
    """A point of the zone, folded into (-pi, pi]^2 on construction."""

    kx: float
    ky: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kx", fold(float(self.kx)))
        object.__setattr__(self, "ky", fold(float(self.ky)))

    def __neg__(self) -> Momentum:
        return Momentum(-self.kx, -self.ky)

    def as_array(self) -> np.ndarray:
        return np.array([self.kx, self.ky])


@dataclass(frozen=True)
class BandPair:
    """Lower/upper band energies and the direct gap (floats or arrays)."""

    e_minus: np.ndarray | float
    e_plus: np.ndarray | float
    gap: np.ndarray | float


@dataclass
class GapScan:
    min_gap: float
    argmin: Momentum
    gap_map: np.ndarray
    k_grid: np.ndarray


def momentum_grid(grid_n: int) -> np.ndarray:
    """Uniform grid of grid_n momenta in (-pi, pi], always containing 0."""
    return np.sort(fold(2.0 * math.pi * np.arange(grid_n) / grid_n))


def off_diagonal(h: HoppingSet, kx: ArrayLike, ky: ArrayLike) -> np.ndarray | complex:
    """n(k), the sublattice-mixing element of the Bloch Hamiltonian."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    n = h.jxp + h.jyp * np.exp(1j * ky) + h.jx * np.exp(-1j * kx) + h.jy * np.exp(-1j * (kx - ky))
    return complex(n) if np.ndim(n) == 0 else n


def off_diagonal_gradient(h: HoppingSet, kx: ArrayLike, ky: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """(dn/dkx, dn/dky)."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    e_y: np.ndarray = h.jy * np.exp(-1j * (kx - ky))
    dn_dkx = -1j * h.jx * np.exp(-1j * kx) - 1j * e_y
    dn_dky = 1j * h.jyp * np.exp(1j * ky) + 1j * e_y
    return dn_dkx, dn_dky


def diagonal(h: HoppingSet, kx: ArrayLike, ky: ArrayLike) -> np.ndarray | float:
    """n0(k), the sublattice-diagonal energy from intra-sublattice hopping."""
    n0 = 2.0 * (h.j2x * np.cos(kx) + h.j2y * np.cos(ky))
    return float(n0) if np.ndim(n0) == 0 else n0


def diagonal_gradient(h: HoppingSet, kx: ArrayLike, ky: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    return -2.0 * h.j2x * np.sin(kx), -2.0 * h.j2y * np.sin(ky)


def bloch_matrix(h: HoppingSet, kx: ArrayLike, ky: ArrayLike) -> np.ndarray:
    """h(k) as a (..., 2, 2) complex array."""
    n = np.asarray(off_diagonal(h, kx, ky))
    n0 = np.asarray(diagonal(h, kx, ky))
    n0, n = np.broadcast_arrays(n0, n)
    out: np.ndarray = np.empty(n.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = n0
    out[..., 1, 1] = n0
    out[..., 0, 1] = n
    out[..., 1, 0] = np.conj(n)
    return out


def bands(h: HoppingSet, kx: ArrayLike, ky: ArrayLike) -> BandPair:
    """E_pm = n0 +- |n| and the direct gap 2|n|."""
    n0 = diagonal(h, kx, ky)
    abs_n = np.abs(off_diagonal(h, kx, ky))
    if np.ndim(abs_n) == 0:
        abs_n = float(abs_n)
    return BandPair(e_minus=n0 - abs_n, e_plus=n0 + abs_n, gap=2.0 * abs_n)


def lower_band_state(h: HoppingSet, kx: ArrayLike, ky: ArrayLike) -> np.ndarray:
    """Normalized lower-band eigenvector(s), shape (..., 2).

    The analytic eigenvector (-n/|n|, 1)/sqrt(2) is gauge-fixed so the first
    component is real and positive: u = (1, -conj(n)/|n|)/sqrt(2).

    Raises:
        DegeneratePoint: If the gap at any requested momentum is below 1e-12.
    """
    n = np.asarray(off_diagonal(h, kx, ky))
    abs_n: np.ndarray = np.abs(n)
    if np.any(2.0 * abs_n < DEGENERATE_GAP):
        idx = np.unravel_index(np.argmin(abs_n), abs_n.shape) if abs_n.ndim else ()
        kx_b, ky_b = np.broadcast_arrays(np.asarray(kx, dtype=float), np.asarray(ky, dtype=float))
        raise DegeneratePoint(
            f"Bands touch at k=({float(kx_b[idx]):.6f}, {float(ky_b[idx]):.6f}); lower-band state undefined"
        )
    u: np.ndarray = np.empty(n.shape + (2,), dtype=complex)
    u[..., 0] = 1.0 / math.sqrt(2.0)
    u[..., 1] = -np.conj(n) / abs_n / math.sqrt(2.0)
    return u


def gap_grid(h: HoppingSet, grid_n: int) -> np.ndarray:
    """Direct gap 2|n| on the grid_n x grid_n momentum grid, indexed [ix, iy]."""
    k: np.ndarray = momentum_grid(grid_n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    return 2.0 * np.abs(off_diagonal(h, kx, ky))


def newton_refine(
    h: HoppingSet,
    kx: ArrayLike,
    ky: ArrayLike,
    max_iter: int = NEWTON_MAX_ITER,
    tol: float = NEWTON_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Newton iteration on (Re n, Im n) = 0 from one or many starting points.

    The Jacobian is analytic; a pseudo-inverse handles the rank-1 Jacobian on
    nodal lines and steps are capped at 0.5 rad. The lowest-|n| iterate of each
    start is kept, so gapped starts return the best point found.

    Returns:
        (kx, ky, |n|) arrays of the refined points.
    """
    kx_c: np.ndarray = np.array(kx, dtype=float, ndmin=1)
    ky_c: np.ndarray = np.array(ky, dtype=float, ndmin=1)
    kx_c, ky_c = (np.array(a) for a in np.broadcast_arrays(kx_c, ky_c))
    best_kx: np.ndarray = kx_c.copy()
    best_ky: np.ndarray = ky_c.copy()
    best_abs: np.ndarray = np.abs(off_diagonal(h, kx_c, ky_c))

    for _ in range(max_iter):
        active: np.ndarray = best_abs >= tol
        if not np.any(active):
            break
        n = off_diagonal(h, kx_c, ky_c)
        dnx, dny = off_diagonal_gradient(h, kx_c, ky_c)
        jac: np.ndarray = np.stack(
            [np.stack([dnx.real, dny.real], axis=-1), np.stack([dnx.imag, dny.imag], axis=-1)],
            axis=-2,
        )
        f: np.ndarray = np.stack([n.real, n.imag], axis=-1)
        step: np.ndarray = -np.einsum("...ij,...j->...i", np.linalg.pinv(jac), f)
        norm: np.ndarray = np.linalg.norm(step, axis=-1)
        scale: np.ndarray = np.where(norm > _NEWTON_MAX_STEP, _NEWTON_MAX_STEP / np.maximum(norm, 1e-300), 1.0)
        step *= scale[..., None]
        step[~active] = 0.0
        kx_c = fold(kx_c + step[..., 0])
        ky_c = fold(ky_c + step[..., 1])
        abs_n: np.ndarray = np.abs(off_diagonal(h, kx_c, ky_c))
        better: np.ndarray = abs_n < best_abs
        best_kx = np.where(better, kx_c, best_kx)
        best_ky = np.where(better, ky_c, best_ky)
        best_abs = np.where(better, abs_n, best_abs)

    return best_kx, best_ky, best_abs


def gap_scan(h: HoppingSet, grid_n: int = 301) -> GapScan:
    """Minimum direct gap over the zone: grid search then Newton refinement."""
    if grid_n < MIN_GRID:
        raise ValueError(f"grid_n must be >= {MIN_GRID}, got {grid_n}")
    k: np.ndarray = momentum_grid(grid_n)
    gaps: np.ndarray = gap_grid(h, grid_n)
    ix, iy = np.unravel_index(np.argmin(gaps), gaps.shape)
    rkx, rky, rabs = newton_refine(h, k[ix], k[iy])
    return GapScan(
        min_gap=float(min(gaps[ix, iy], 2.0 * rabs[0])),
        argmin=Momentum(rkx[0], rky[0]) if 2.0 * rabs[0] <= gaps[ix, iy] else Momentum(k[ix], k[iy]),
        gap_map=gaps,
        k_grid=k,
    )


def symmetry_residuals(h: HoppingSet, kx: ArrayLike, ky: ArrayLike) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frobenius residuals of time-reversal, inversion and chiral symmetry.

    tr     = ||h(-k) - conj(h(k))||
    inv    = ||sx h(k) sx - h(-k)||
    chiral = ||sz h(k) sz + h(k)||  (equals 2 sqrt(2) |n0(k)|)
    """
    hk: np.ndarray = bloch_matrix(h, kx, ky)
    hmk: np.ndarray = bloch_matrix(h, -np.asarray(kx, dtype=float), -np.asarray(ky, dtype=float))
    tr = np.linalg.norm(hmk - np.conj(hk), axis=(-2, -1))
    inv = np.linalg.norm(SIGMA_X @ hk @ SIGMA_X - hmk, axis=(-2, -1))
    chiral = np.linalg.norm(SIGMA_Z @ hk @ SIGMA_Z + hk, axis=(-2, -1))
    return tr, inv, chiral


def high_symmetry_sum(h: HoppingSet, point: str) -> float:
    """The signed hopping sum equal to n(k) at a high-symmetry point."""
    signs: tuple[int, int, int, int] = _HIGH_SYMMETRY_SIGNS[point]
    return signs[0] * h.jxp + signs[1] * h.jyp + signs[2] * h.jx + signs[3] * h.jy


def high_symmetry_gaps(h: HoppingSet) -> dict[str, dict[str, float]]:
    """Gap and closing condition (signed sum) at G, X, Y and M."""
    out: dict[str, dict[str, float]] = {}
    for name, (kx, ky) in HIGH_SYMMETRY_POINTS.items():
        out[name] = {
            "kx": kx,
            "ky": ky,
            "gap": float(bands(h, kx, ky).gap),
            "signed_sum": high_symmetry_sum(h, name),
        }
    return out


def hopping_for_closing(point: str, base: HoppingSet) -> HoppingSet:
    """Adjust jxp of ``base`` so the gap closes exactly at the given high-symmetry point."""
    if point not in _HIGH_SYMMETRY_SIGNS:
        raise ValueError(f"Unknown high-symmetry point {point!r}; expected one of {sorted(_HIGH_SYMMETRY_SIGNS)}")
    signs = _HIGH_SYMMETRY_SIGNS[point]
    jxp: float = -(signs[1] * base.jyp + signs[2] * base.jx + signs[3] * base.jy)
    return HoppingSet(jxp, base.jx, base.jyp, base.jy, base.j2x, base.j2y)


def band_path(h: HoppingSet, points_per_segment: int = 100) -> dict[str, np.ndarray]:
    """Bands along G-X-M-G-Y.

    Returns:
        Dict with arrays kx, ky, s (cumulative path length), e_minus, e_plus, gap.
    """
    kx_parts: list[np.ndarray] = []
    ky_parts: list[np.ndarray] = []
    for start, stop in zip(BAND_PATH[:-1], BAND_PATH[1:]):
        p0 = np.array(HIGH_SYMMETRY_POINTS[start])
        p1 = np.array(HIGH_SYMMETRY_POINTS[stop])
        t: np.ndarray = np.linspace(0.0, 1.0, points_per_segment, endpoint=False)
        kx_parts.append(p0[0] + t * (p1[0] - p0[0]))
        ky_parts.append(p0[1] + t * (p1[1] - p0[1]))
    end = HIGH_SYMMETRY_POINTS[BAND_PATH[-1]]
    kx_path: np.ndarray = np.concatenate(kx_parts + [np.array([end[0]])])
    ky_path: np.ndarray = np.concatenate(ky_parts + [np.array([end[1]])])
    steps: np.ndarray = np.hypot(np.diff(kx_path), np.diff(ky_path))
    s: np.ndarray = np.concatenate([[0.0], np.cumsum(steps)])
    b: BandPair = bands(h, kx_path, ky_path)
    return {"kx": kx_path, "ky": ky_path, "s": s, "e_minus": b.e_minus, "e_plus": b.e_plus, "gap": b.gap}
