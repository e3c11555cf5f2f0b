"""Lattice geometry and the dipolar hopping rates it produces.

Two square sublattices A and B (lattice constant a = 1) are offset by
(beta_x, beta_y). Every atom carries an in-plane transition dipole at angle
theta_m, and the excitation exchange rate between two atoms is

    V = (3 cos^2(theta) - 1) / r^3        (energy unit J = |d|^2 / (4 pi eps0 a^3))

with theta the angle between the bond and the dipole axis. Four
inter-sublattice bonds (x', x, y', y) and two intra-sublattice bonds
(2x, 2y) define the six hoppings of the 2D SSH model.

Frame: unit-cell rows are indexed along -y, so A(n, m) sits at (n, -m) and
B(n, m) at (n + beta_x, -m + beta_y). In this frame the bond labels of the
real-space Hamiltonian match the distance formulas below and the dipole axis
is (cos theta_m, -sin theta_m).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from rydssh.errors import DegenerateGeometry, RangeError, RydSSHError


# --- Angles ---

MAGIC_ANGLE: float = math.acos(1.0 / math.sqrt(3.0))
PI_OVER_4: float = math.pi / 4.0
THETA_MODES: dict[str, float] = {"magic": MAGIC_ANGLE, "pi4": PI_OVER_4}

# --- Tolerances ---

# Shortest bond accepted before the coupling is treated as divergent
R_MIN: float = 1e-6
_COS_SLACK: float = 1e-12


@dataclass(frozen=True)
class GeometryConfig:
    """Offsets of sublattice B (units of a) and the dipole angle (radians)."""

    beta_x: float
    beta_y: float
    theta_m: float = MAGIC_ANGLE
    a: float = 1.0

    def swapped(self) -> GeometryConfig:
        """Mirror image under x <-> y: offsets exchanged, theta_m -> pi/2 - theta_m."""
        return GeometryConfig(self.beta_y, self.beta_x, math.pi / 2.0 - self.theta_m, self.a)


@dataclass(frozen=True)
class BondGeometry:
    """Distances (units of a) and direction cosines of the six bonds."""

    r_xp: float
    r_x: float
    r_yp: float
    r_y: float
    cos_xp: float
    cos_x: float
    cos_yp: float
    cos_y: float
    cos_2x: float
    cos_2y: float
    r_2x: float = 1.0
    r_2y: float = 1.0


@dataclass(frozen=True)
class HoppingSet:
    """The six hopping energies of the model, in units of J (signed)."""

    jxp: float
    jx: float
    jyp: float
    jy: float
    j2x: float
    j2y: float

    def with_overrides(self, j2x: float | None = None, j2y: float | None = None) -> HoppingSet:
        """Copy with the intra-sublattice hoppings forced (e.g. the chiral limit)."""
        return replace(
            self,
            j2x=self.j2x if j2x is None else float(j2x),
            j2y=self.j2y if j2y is None else float(j2y),
        )

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.as_array())))


def theta_from_mode(mode: str) -> float:
    """Dipole angle for a named mode ("magic" -> J_2x = 0, "pi4" -> J_2x = J_2y)."""
    try:
        return THETA_MODES[mode]
    except KeyError:
        raise ValueError(f"Unknown theta_m mode: {mode!r}. Must be one of {sorted(THETA_MODES)}")


def dipole_axis(theta_m: float) -> np.ndarray:
    """Unit dipole direction in the lattice frame (rows indexed along -y)."""
    return np.array([math.cos(theta_m), -math.sin(theta_m)])


def dipole_coupling(r: float, cos_theta: float, r_min: float = R_MIN) -> float:
    """Excitation exchange rate (3 cos^2 theta - 1) / r^3 in units of J.

    Raises:
        DegenerateGeometry: If r <= r_min (coincident atoms).
    """
    if r <= r_min:
        raise DegenerateGeometry(f"Bond length {r:.3g} a is below r_min={r_min:g} a (coincident atoms)")
    if abs(cos_theta) > 1.0 + _COS_SLACK:
        raise ValueError(f"Direction cosine out of range: {cos_theta!r}")
    c: float = min(1.0, max(-1.0, cos_theta))
    return (3.0 * c * c - 1.0) / r**3


def bond_geometry(config: GeometryConfig) -> BondGeometry:
    """Distances and direction cosines for the four inter- and two intra-sublattice bonds."""
    bx: float = config.beta_x * config.a
    by: float = config.beta_y * config.a
    a: float = config.a
    c: float = math.cos(config.theta_m)
    s: float = math.sin(config.theta_m)

    r_xp: float = math.hypot(bx, by)
    r_x: float = math.hypot(a - bx, by)
    r_yp: float = math.hypot(bx, a - by)
    r_y: float = math.hypot(a - bx, a - by)

    for name, r in (("x'", r_xp), ("x", r_x), ("y'", r_yp), ("y", r_y)):
        if r < R_MIN:
            raise DegenerateGeometry(
                f"Bond {name} has length {r:.3g} a at beta=({config.beta_x}, {config.beta_y}): atoms coincide"
            )

    return BondGeometry(
        r_xp=r_xp / a,
        r_x=r_x / a,
        r_yp=r_yp / a,
        r_y=r_y / a,
        cos_xp=(bx * c - by * s) / r_xp,
        cos_x=((a - bx) * c + by * s) / r_x,
        cos_yp=(bx * c + (a - by) * s) / r_yp,
        cos_y=((a - bx) * c - (a - by) * s) / r_y,
        cos_2x=c,
        cos_2y=s,
    )


def hopping_set(config: GeometryConfig) -> HoppingSet:
    """Evaluate the dipolar coupling on every bond of the geometry."""
    bonds: BondGeometry = bond_geometry(config)
    return HoppingSet(
        jxp=dipole_coupling(bonds.r_xp, bonds.cos_xp),
        jx=dipole_coupling(bonds.r_x, bonds.cos_x),
        jyp=dipole_coupling(bonds.r_yp, bonds.cos_yp),
        jy=dipole_coupling(bonds.r_y, bonds.cos_y),
        j2x=dipole_coupling(bonds.r_2x, bonds.cos_2x),
        j2y=dipole_coupling(bonds.r_2y, bonds.cos_2y),
    )


def validate(config: GeometryConfig) -> list[RydSSHError]:
    """Collect every invariant violation of a geometry (empty list means valid)."""
    problems: list[RydSSHError] = []
    for name, value in (("beta_x", config.beta_x), ("beta_y", config.beta_y)):
        if not math.isfinite(value) or not 0.0 <= value <= 1.0:
            problems.append(RangeError(f"{name}={value!r} outside [0, 1]"))
    if not math.isfinite(config.theta_m) or not 0.0 <= config.theta_m <= math.pi / 2.0:
        problems.append(RangeError(f"theta_m={config.theta_m!r} outside [0, pi/2]"))
    if not problems:
        try:
            bond_geometry(config)
        except DegenerateGeometry as e:
            problems.append(e)
    return problems


def to_physical(h: HoppingSet, scale_mhz: float) -> HoppingSet:
    """Convert hoppings from units of J to MHz given the size of J in MHz."""
    if not scale_mhz > 0.0:
        raise ValueError(f"scale_mhz must be positive, got {scale_mhz!r}")
    return HoppingSet(*(v * scale_mhz for v in h.as_array()))


def bandgap_mhz(h: HoppingSet, scale_mhz: float, grid_n: int = 101) -> tuple[float, float]:
    """Smallest and largest direct band gap over the zone, in MHz."""
    from rydssh.bloch import gap_grid

    gaps: np.ndarray = gap_grid(to_physical(h, scale_mhz), grid_n)
    return float(gaps.min()), float(gaps.max())
