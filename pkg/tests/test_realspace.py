"""Tests for finite-lattice Hamiltonians and edge/corner localization."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import geometry
from rydssh.bloch import bands
from rydssh.errors import NumericalError
from rydssh.lattice import GeometryConfig, bond_geometry, hopping_set
from rydssh.linalg import EigenSet, HermitianMatrix
from rydssh.realspace import (
    FiniteLatticeSpec,
    build_hamiltonian,
    bulk_window,
    classify_decay,
    localization_report,
    midgap_states,
    site_positions,
    spectrum,
    zero_modes,
)

TX_DEEP = GeometryConfig(0.75, 0.25)
TY_DEEP = GeometryConfig(0.25, 0.75)
TXY_DEEP = GeometryConfig(0.75, 0.75)


class TestSpec:
    def test_rejects_small_lattice(self):
        with pytest.raises(ValueError):
            FiniteLatticeSpec(1, 4)

    def test_rejects_short_cutoff(self):
        with pytest.raises(ValueError):
            FiniteLatticeSpec(4, 4, coupling_model="longrange", cutoff=0.5)

    def test_overrides_need_nearest(self):
        with pytest.raises(ValueError):
            FiniteLatticeSpec(4, 4, coupling_model="longrange", j2x=0.0)

    def test_site_index_layout(self):
        spec = FiniteLatticeSpec(3, 2)
        assert spec.n_sites == 12
        assert spec.site_index(0, 0, 0) == 0
        assert spec.site_index(1, 0, 0) == 1
        assert spec.site_index(0, 1, 0) == 2
        assert spec.site_index(1, 2, 1) == 11


class TestPositions:
    def test_first_cell(self):
        geom = GeometryConfig(0.3, 0.4)
        sites = site_positions(FiniteLatticeSpec(2, 2), geom)
        assert len(sites) == 8
        assert (sites[0].sublattice, sites[0].x, sites[0].y) == ("A", 0.0, 0.0)
        assert (sites[1].sublattice, sites[1].x, sites[1].y) == ("B", 0.3, 0.4)

    def test_six_by_six_count(self):
        assert len(site_positions(FiniteLatticeSpec(6, 6), geometry("SM"))) == 72

    def test_neighbour_distances_match_bonds(self):
        geom = GeometryConfig(0.3, 0.4)
        spec = FiniteLatticeSpec(3, 3)
        sites = site_positions(spec, geom)
        bonds = bond_geometry(geom)

        def dist(i: int, k: int) -> float:
            return math.hypot(sites[i].x - sites[k].x, sites[i].y - sites[k].y)

        a = spec.site_index(0, 1, 0)
        assert dist(a, spec.site_index(1, 1, 0)) == pytest.approx(bonds.r_xp)
        assert dist(a, spec.site_index(1, 0, 0)) == pytest.approx(bonds.r_x)
        assert dist(a, spec.site_index(1, 1, 1)) == pytest.approx(bonds.r_yp)
        assert dist(a, spec.site_index(1, 0, 1)) == pytest.approx(bonds.r_y)


class TestHamiltonian:
    def test_two_by_two_open(self):
        geom = geometry("SM")
        h = hopping_set(geom)
        spec = FiniteLatticeSpec(2, 2)
        mat = build_hamiltonian(spec, geom).data
        expected = np.zeros((8, 8))
        a = {(n, m): spec.site_index(0, n, m) for n in range(2) for m in range(2)}
        b = {(n, m): spec.site_index(1, n, m) for n in range(2) for m in range(2)}
        pairs = []
        for n in range(2):
            for m in range(2):
                pairs.append((a[n, m], b[n, m], h.jxp))
        for m in range(2):
            pairs.append((b[0, m], a[1, m], h.jx))
            pairs.append((a[m, 0], b[m, 1], h.jyp))
            pairs.append((a[0, m], a[1, m], h.j2x))
            pairs.append((b[0, m], b[1, m], h.j2x))
            pairs.append((a[m, 0], a[m, 1], h.j2y))
            pairs.append((b[m, 0], b[m, 1], h.j2y))
        pairs.append((b[0, 1], a[1, 0], h.jy))
        for i, k, v in pairs:
            expected[i, k] += v
            expected[k, i] += v
        assert np.allclose(mat, expected, atol=1e-14)

    def test_periodic_matches_bloch(self, rng):
        spec = FiniteLatticeSpec(8, 8, boundary="periodic")
        k = 2.0 * math.pi * np.arange(8) / 8
        kx, ky = np.meshgrid(k, k, indexing="ij")
        for _ in range(20):
            bx, by = rng.uniform(0.15, 0.85, size=2)
            geom = GeometryConfig(float(bx), float(by), float(rng.uniform(0.1, 1.4)))
            b = bands(hopping_set(geom), kx, ky)
            expected = np.sort(np.concatenate([b.e_minus.ravel(), b.e_plus.ravel()]))
            assert np.allclose(spectrum(spec, geom).values, expected, atol=1e-9)

    def test_longrange_unit_cutoff_is_nearest(self):
        geom = GeometryConfig(0.4, 0.45, 0.7)
        near = build_hamiltonian(FiniteLatticeSpec(4, 4), geom).data
        far = build_hamiltonian(FiniteLatticeSpec(4, 4, coupling_model="longrange", cutoff=1.0), geom).data
        assert np.allclose(near, far, atol=1e-12)

    def test_longrange_adds_couplings(self):
        geom = GeometryConfig(0.4, 0.45, 0.7)
        near = build_hamiltonian(FiniteLatticeSpec(4, 4), geom).data
        far = build_hamiltonian(FiniteLatticeSpec(4, 4, coupling_model="longrange", cutoff=3.0), geom).data
        assert np.count_nonzero(np.abs(far) > 0.0) > np.count_nonzero(np.abs(near) > 0.0)

    def test_chiral_limit_spectrum_symmetric(self):
        spec = FiniteLatticeSpec(5, 4, j2x=0.0, j2y=0.0)
        e = spectrum(spec, TXY_DEEP).values
        assert np.allclose(e, -e[::-1], atol=1e-9)

    def test_hopping_override(self):
        h = hopping_set(geometry("TX"))
        spec = FiniteLatticeSpec(3, 3, hoppings=h.with_overrides(0.0, 0.0))
        mat = build_hamiltonian(spec, geometry("TY")).data
        assert mat[spec.site_index(0, 0, 0), spec.site_index(1, 0, 0)] == pytest.approx(h.jxp)
        assert mat[spec.site_index(0, 0, 0), spec.site_index(0, 0, 1)] == 0.0


class TestDecay:
    def test_exponential(self):
        d = np.arange(8.0)
        fit = classify_decay(d, np.exp(-d))
        assert fit.kind == "exponential"
        assert fit.rate == pytest.approx(1.0)
        assert fit.r2_exponential == pytest.approx(1.0)

    def test_polynomial(self):
        d = np.arange(11.0)
        fit = classify_decay(d, (d + 1.0) ** -4)
        assert fit.kind == "polynomial"
        assert fit.r2_polynomial == pytest.approx(1.0)

    def test_flat_is_bulk(self):
        assert classify_decay(np.arange(5.0), np.full(5, 0.2)).kind == "bulk"

    def test_too_few_distances(self):
        fit = classify_decay(np.arange(4.0), np.array([1.0, 1e-3, 1e-20, 1e-30]))
        assert fit.kind == "bulk"
        assert fit.points == 2

    def test_repeated_distances_fit_per_site(self):
        d = np.repeat(np.arange(5.0), 3)
        fit = classify_decay(d, np.exp(-0.5 * d))
        assert fit.kind == "exponential"
        assert fit.points == 15
        assert fit.rate == pytest.approx(0.5)


def _corner_state(spec: FiniteLatticeSpec, corners: list[tuple[int, int]], rate: float) -> EigenSet:
    """Density exp(-rate * d) on every site, d the Chebyshev cell distance to the nearest listed corner."""
    psi = np.zeros(spec.n_sites, dtype=complex)
    for m in range(spec.cells_y):
        for n in range(spec.cells_x):
            d = min(max(abs(n - cn), abs(m - cm)) for cn, cm in corners)
            for s in (0, 1):
                psi[spec.site_index(s, n, m)] = math.exp(-0.5 * rate * d)
    psi /= np.linalg.norm(psi)
    return EigenSet(values=np.array([0.0]), vectors=psi[:, None])


class TestCornerDecay:
    @pytest.mark.parametrize("corners", [[(0, 0)], [(0, 0), (5, 5)], [(5, 0), (0, 5)]])
    def test_exponential_corner_profile(self, corners):
        spec = FiniteLatticeSpec(6, 6)
        (report,) = localization_report(_corner_state(spec, corners, 2.0), spec)
        assert report.corner >= 0.9
        assert report.decay.kind == "exponential"
        assert report.decay.rate == pytest.approx(2.0)
        assert report.decay.r2_exponential == pytest.approx(1.0)
        assert report.decay.points == spec.n_sites

    def test_quarter_pi_corner_states_fit_per_site(self):
        spec = FiniteLatticeSpec(6, 6)
        _, reports = midgap_states(spec, GeometryConfig(0.75, 0.75, math.pi / 4))
        corner_states = [r for r in reports if r.corner >= 0.5]
        assert len(corner_states) >= 10
        assert all(r.ring >= 0.95 for r in corner_states)
        heaviest = max(corner_states, key=lambda r: r.corner)
        assert heaviest.corner >= 0.9
        assert heaviest.decay.points >= 60
        # confined to the boundary ring: the per-site fit finds a decaying profile
        assert heaviest.decay.kind == "exponential"
        assert heaviest.decay.rate > 1.0


class TestLocalization:
    def test_weights_and_ipr(self):
        spec = FiniteLatticeSpec(5, 5)
        eigs = spectrum(spec, geometry("SM"))
        for r in localization_report(eigs, spec):
            assert 1.0 / spec.n_sites - 1e-12 <= r.ipr <= 1.0 + 1e-12
            assert 0.0 <= r.x_edge <= 1.0 + 1e-12
            assert 0.0 <= r.ring <= 1.0 + 1e-12
            assert r.left + r.right == pytest.approx(r.x_edge)
            assert r.top + r.bottom == pytest.approx(r.y_edge)

    def test_zero_modes(self):
        h = HermitianMatrix(np.diag([-1.0, 0.0, 1e-12, 1.0]))
        eigs = EigenSet(values=np.array([-1.0, 0.0, 1e-12, 1.0]), vectors=np.eye(4, dtype=complex))
        assert list(zero_modes(eigs, h)) == [1, 2]

    def test_bulk_window_contains_bands(self):
        h = hopping_set(geometry("TX"))
        window = bulk_window(h)
        k = np.linspace(-math.pi, math.pi, 37)
        kx, ky = np.meshgrid(k, k)
        b = bands(h, kx, ky)
        assert window.lower[0] <= b.e_minus.min() + 1e-12 and b.e_minus.max() <= window.lower[1] + 1e-12
        assert window.upper[0] <= b.e_plus.min() + 1e-12 and b.e_plus.max() <= window.upper[1] + 1e-12
        assert window.lower[1] < window.upper[0]


class TestMidgap:
    def test_trivial_has_none(self):
        _, reports = midgap_states(FiniteLatticeSpec(6, 6), geometry("NT"))
        assert reports == []

    def test_periodic_has_none(self):
        _, reports = midgap_states(FiniteLatticeSpec(6, 6, boundary="periodic"), geometry("TX"))
        assert reports == []

    def test_y_topological_edge_states(self):
        _, reports = midgap_states(FiniteLatticeSpec(6, 6), TY_DEEP)
        assert reports
        assert all(r.y_edge >= 0.6 for r in reports)
        assert any(r.decay.kind == "exponential" for r in reports)

    def test_x_topological_edge_states(self):
        _, reports = midgap_states(FiniteLatticeSpec(6, 6), TX_DEEP)
        assert reports
        assert all(r.x_edge >= 0.6 for r in reports)
        assert any(r.decay.kind == "exponential" for r in reports)

    def test_xy_topological_two_edge_subsets(self):
        _, reports = midgap_states(FiniteLatticeSpec(6, 6), TXY_DEEP)
        y_states = [r for r in reports if r.y_edge >= 0.6 and r.x_edge < 0.1]
        x_states = [r for r in reports if r.x_edge >= 0.9]
        # y-edge subset is flat: the j2y hop into the next row sets its energy
        y_energies = np.array([r.energy for r in y_states])
        assert len(y_states) >= 4
        assert np.all((np.abs(y_energies) > 0.25) & (np.abs(y_energies) < 0.45))
        assert np.ptp(y_energies) < 0.1
        x_energies = np.array([r.energy for r in x_states])
        assert x_energies.min() < -1.7
        assert x_energies.max() > 1.7

    def test_xy_chiral_corner_modes(self):
        spec = FiniteLatticeSpec(6, 6, j2x=0.0, j2y=0.0)
        eigs, reports = midgap_states(spec, TXY_DEEP)
        h = build_hamiltonian(spec, TXY_DEEP)
        lowest = sorted(reports, key=lambda r: abs(r.energy))[:4]
        assert all(r.corner >= 0.5 for r in lowest)
        assert len(zero_modes(eigs, h)) >= 2
        # second pair is split off by finite size to about 1.07e-8 * ||H||
        assert max(abs(r.energy) for r in lowest) < 2e-8 * h.norm
        assert all(r.ring >= 0.5 for r in reports)

    def test_longrange_unsupported(self):
        with pytest.raises(NumericalError):
            midgap_states(FiniteLatticeSpec(3, 3, coupling_model="longrange"), geometry("TX"))
