"""Dense Hermitian diagonalization for finite lattices and ribbons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from rydssh.errors import NoConvergence


HERMITICITY_TOL: float = 1e-12
# Components within this of the largest modulus count as tied when fixing the gauge
_GAUGE_TIE_TOL: float = 1e-12


@dataclass(frozen=True)
class HermitianMatrix:
    """A dense complex matrix checked to be Hermitian on construction."""

    data: np.ndarray

    def __post_init__(self) -> None:
        m: np.ndarray = np.asarray(self.data, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"Expected a square matrix, got shape {m.shape}")
        scale: float = max(1.0, float(np.linalg.norm(m)))
        asym: float = float(np.linalg.norm(m - m.conj().T))
        if asym >= HERMITICITY_TOL * scale:
            raise ValueError(f"Matrix is not Hermitian: ||H - H^dag||_F = {asym:.3e}")
        object.__setattr__(self, "data", m)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True)
class EigenSet:
    """Ascending eigenvalues and the matching orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def probabilities(self) -> np.ndarray:
        """|psi_i|^2 for every state, shape (dim, n_states)."""
        return np.abs(self.vectors) ** 2


def fix_gauge(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first largest-modulus component is real and positive."""
    out: np.ndarray = np.array(vectors, dtype=complex)
    mags: np.ndarray = np.abs(out)
    top: np.ndarray = mags.max(axis=0)
    # first row index reaching the column maximum (within tolerance)
    pivot: np.ndarray = np.argmax(mags >= top - _GAUGE_TIE_TOL, axis=0)
    cols: np.ndarray = np.arange(out.shape[1])
    phase: np.ndarray = out[pivot, cols] / np.where(top > 0.0, np.abs(out[pivot, cols]), 1.0)
    phase = np.where(top > 0.0, phase, 1.0)
    return out * np.conj(phase)[None, :]


def hermitian_eig(h: HermitianMatrix) -> EigenSet:
    """Full spectrum of a Hermitian matrix, ascending, with gauge-fixed eigenvectors.

    Raises:
        NoConvergence: If LAPACK fails to converge or the input is not finite.
    """
    try:
        values, vectors = scipy.linalg.eigh(h.data, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as e:
        raise NoConvergence(f"Hermitian eigensolver failed on a {h.dim}x{h.dim} matrix: {e}") from e
    return EigenSet(values=np.asarray(values, dtype=float), vectors=fix_gauge(vectors))


def residuals(h: HermitianMatrix, eigs: EigenSet) -> tuple[float, float]:
    """(||H V - V diag(E)||_F, ||V^dag V - I||_F)."""
    v: np.ndarray = eigs.vectors
    recon: float = float(np.linalg.norm(h.data @ v - v * eigs.values[None, :]))
    ortho: float = float(np.linalg.norm(v.conj().T @ v - np.eye(v.shape[1])))
    return recon, ortho
