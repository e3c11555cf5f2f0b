"""Ribbon spectra from a partial Fourier transform.

An x-infinite ribbon keeps kx as a parameter and W unit cells along y, with
basis (a_1, b_1, ..., a_W, b_W); a y-infinite ribbon keeps ky and W cells
along x. ``periodic=True`` closes the finite direction into a ring, which
must reproduce the Bloch bands at the commensurate momenta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from tqdm import tqdm

from rydssh.bloch import bands, fold
from rydssh.lattice import HoppingSet
from rydssh.linalg import HermitianMatrix, hermitian_eig


# --- Defaults ---

DEFAULT_WIDTH: int = 8
DEFAULT_K_SAMPLES: int = 256
MIN_K_SAMPLES: int = 16
EDGE_BRANCH_WEIGHT: float = 0.6
BULK_MARGIN: float = 1e-6
# Transverse momenta used to project the bulk bands onto each ribbon momentum
PROJECTION_SAMPLES: int = 401

Orientation = Literal["x", "y"]


@dataclass(frozen=True)
class RibbonSpec:
    orientation: Orientation = "x"
    width: int = DEFAULT_WIDTH
    k_samples: int = DEFAULT_K_SAMPLES

    def __post_init__(self) -> None:
        if self.orientation not in ("x", "y"):
            raise ValueError(f"orientation must be 'x' or 'y', got {self.orientation!r}")
        if self.width < 2:
            raise ValueError(f"width must be >= 2, got {self.width}")
        if self.k_samples < MIN_K_SAMPLES:
            raise ValueError(f"k_samples must be >= {MIN_K_SAMPLES}, got {self.k_samples}")


@dataclass
class RibbonSpectrum:
    """Energies [k, state] ascending per k, with edge weights and edge-branch flags."""

    k: np.ndarray
    energies: np.ndarray
    edge_weight: np.ndarray
    edge_branch: np.ndarray
    profiles: np.ndarray = field(repr=False)

    @property
    def n_edge_branch_states(self) -> int:
        return int(np.count_nonzero(self.edge_branch))

    def edge_energies(self) -> list[np.ndarray]:
        """Edge-branch energies at every k (possibly empty arrays)."""
        return [self.energies[i][self.edge_branch[i]] for i in range(len(self.k))]


def _ribbon_matrix(
    onsite: float,
    intra: complex,
    inter: complex,
    same_sublattice: float,
    width: int,
    periodic: bool,
) -> np.ndarray:
    """Two-leg chain: H[a_j, b_j] = intra, H[a_{j+1}, b_j] = inter, a/a and b/b neighbours hop by same_sublattice."""
    dim: int = 2 * width
    mat: np.ndarray = np.zeros((dim, dim), dtype=complex)
    np.fill_diagonal(mat, onsite)
    for j in range(width):
        a, b = 2 * j, 2 * j + 1
        mat[a, b] += intra
        mat[b, a] += np.conj(intra)
    links: list[tuple[int, int]] = [(j, j + 1) for j in range(width - 1)]
    if periodic:
        links.append((width - 1, 0))
    for j, j_next in links:
        a, b = 2 * j, 2 * j + 1
        a_next, b_next = 2 * j_next, 2 * j_next + 1
        for row, col, value in (
            (a_next, b, inter),
            (a, a_next, same_sublattice),
            (b, b_next, same_sublattice),
        ):
            mat[row, col] += value
            mat[col, row] += np.conj(value)
    return mat


def ribbon_hamiltonian_x(
    h: HoppingSet,
    kx: float,
    width: int,
    periodic: bool = False,
) -> HermitianMatrix:
    """Ribbon infinite along x, W cells along y.

    H[a_m, b_m] = jxp + jx e^{-i kx}, H[a_m, b_{m+1}] = jyp + jy e^{-i kx},
    j2y hops a_m <-> a_{m+1} and b_m <-> b_{m+1}, on-site 2 j2x cos kx.
    """
    t1: complex = h.jxp + h.jx * np.exp(-1j * kx)
    t2: complex = h.jyp + h.jy * np.exp(-1j * kx)
    # _ribbon_matrix couples a_{j+1} with b_j, so mirror the chain: cell j -> W - 1 - j
    mat: np.ndarray = _ribbon_matrix(
        onsite=2.0 * h.j2x * math.cos(kx),
        intra=t1,
        inter=t2,
        same_sublattice=h.j2y,
        width=width,
        periodic=periodic,
    )
    return HermitianMatrix(_reverse_cells(mat, width))


def ribbon_hamiltonian_y(
    h: HoppingSet,
    ky: float,
    width: int,
    periodic: bool = False,
) -> HermitianMatrix:
    """Ribbon infinite along y, W cells along x.

    H[a_n, b_n] = jxp + jyp e^{i ky}, H[a_{n+1}, b_n] = jx + jy e^{i ky},
    j2x hops a_n <-> a_{n+1} and b_n <-> b_{n+1}, on-site 2 j2y cos ky.
    """
    mat: np.ndarray = _ribbon_matrix(
        onsite=2.0 * h.j2y * math.cos(ky),
        intra=h.jxp + h.jyp * np.exp(1j * ky),
        inter=h.jx + h.jy * np.exp(1j * ky),
        same_sublattice=h.j2x,
        width=width,
        periodic=periodic,
    )
    return HermitianMatrix(mat)


def _reverse_cells(mat: np.ndarray, width: int) -> np.ndarray:
    order: np.ndarray = np.array([2 * (width - 1 - j) + s for j in range(width) for s in (0, 1)])
    return mat[np.ix_(order, order)]


def ribbon_matrix(h: HoppingSet, orientation: Orientation, k: float, width: int) -> HermitianMatrix:
    if orientation == "x":
        return ribbon_hamiltonian_x(h, k, width)
    return ribbon_hamiltonian_y(h, k, width)


def projected_bulk(h: HoppingSet, orientation: Orientation, k: float, samples: int = PROJECTION_SAMPLES) -> tuple[tuple[float, float], tuple[float, float]]:
    """Bulk band ranges at fixed ribbon momentum, over all transverse momenta."""
    q: np.ndarray = np.linspace(-math.pi, math.pi, samples)
    b = bands(h, k, q) if orientation == "x" else bands(h, q, k)
    return (float(np.min(b.e_minus)), float(np.max(b.e_minus))), (float(np.min(b.e_plus)), float(np.max(b.e_plus)))


def ribbon_spectrum(h: HoppingSet, spec: RibbonSpec, quiet: bool = True) -> RibbonSpectrum:
    """Diagonalize the ribbon on a uniform momentum grid in (-pi, pi].

    A state is on an edge branch when its energy lies outside the projected
    bulk bands at the same momentum and its weight on the two outermost unit
    cells is at least 0.6.
    """
    w: int = spec.width
    k: np.ndarray = np.array(fold(-math.pi + 2.0 * math.pi * (np.arange(spec.k_samples) + 1) / spec.k_samples))
    energies: np.ndarray = np.empty((spec.k_samples, 2 * w))
    profiles: np.ndarray = np.empty((spec.k_samples, 2 * w, w))
    edge_weight: np.ndarray = np.empty((spec.k_samples, 2 * w))
    edge_branch: np.ndarray = np.zeros((spec.k_samples, 2 * w), dtype=bool)

    for i, kk in enumerate(tqdm(k, desc=f"{spec.orientation}-ribbon", disable=quiet)):
        eigs = hermitian_eig(ribbon_matrix(h, spec.orientation, float(kk), w))
        cells: np.ndarray = (np.abs(eigs.vectors) ** 2).reshape(w, 2, 2 * w).sum(axis=1).T
        energies[i] = eigs.values
        profiles[i] = cells
        edge_weight[i] = cells[:, 0] + cells[:, -1]
        lower, upper = projected_bulk(h, spec.orientation, float(kk))
        in_bulk = ((eigs.values >= lower[0] - BULK_MARGIN) & (eigs.values <= lower[1] + BULK_MARGIN)) | (
            (eigs.values >= upper[0] - BULK_MARGIN) & (eigs.values <= upper[1] + BULK_MARGIN)
        )
        edge_branch[i] = ~in_bulk & (edge_weight[i] >= EDGE_BRANCH_WEIGHT)

    return RibbonSpectrum(k=k, energies=energies, edge_weight=edge_weight, edge_branch=edge_branch, profiles=profiles)


def edge_profile(spectrum: RibbonSpectrum, k_index: int, state: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean cell density against distance from the nearer ribbon edge."""
    cells: np.ndarray = spectrum.profiles[k_index, state]
    w: int = len(cells)
    dist: np.ndarray = np.minimum(np.arange(w), w - 1 - np.arange(w))
    shells: np.ndarray = np.unique(dist)
    return shells.astype(float), np.array([cells[dist == s].mean() for s in shells])
