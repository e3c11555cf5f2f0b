"""Shared fixtures: labeled lattice geometries at the magic dipole angle."""

from __future__ import annotations

import numpy as np
import pytest

from rydssh.lattice import MAGIC_ANGLE, GeometryConfig, HoppingSet, hopping_set

# Offsets whose phases are known: trivial, x-, y- and xy-topological,
# Dirac semimetal and the mirror-symmetric nodal-line point.
LABELED_POINTS: dict[str, tuple[float, float]] = {
    "NT": (0.2, 0.2),
    "TX": (0.8, 0.2),
    "TY": (0.2, 0.8),
    "TXY": (0.8, 0.8),
    "SM": (0.6, 0.6),
    "NLSM": (0.5, 0.5),
}


def geometry(label: str, theta_m: float = MAGIC_ANGLE) -> GeometryConfig:
    bx, by = LABELED_POINTS[label]
    return GeometryConfig(bx, by, theta_m)


def hoppings(label: str) -> HoppingSet:
    return hopping_set(geometry(label))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def sm_hoppings() -> HoppingSet:
    return hoppings("SM")


@pytest.fixture
def mirror_hoppings() -> HoppingSet:
    return hoppings("NLSM")


def random_hoppings(rng: np.random.Generator, scale: float = 5.0) -> HoppingSet:
    return HoppingSet(*rng.uniform(-scale, scale, size=6))
