"""Tests for Zak phases, Dirac points, nodal lines and Berry curvature."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import hoppings
from rydssh.bloch import Momentum, bands, diagonal, hopping_for_closing, lower_band_state, periodic_distance
from rydssh.errors import DegenerateCone, DegeneratePoint, LoopThroughNode, NonQuantized, NotGapped
from rydssh.lattice import GeometryConfig, HoppingSet, hopping_set
from rydssh.phases import locate_closing
from rydssh.topology import (
    berry_curvature_map,
    characterize_cone,
    cone_model,
    dirac_charge,
    dirac_points,
    is_mirror_symmetric,
    line_berry_phase,
    locate_dirac_points,
    merging_exponents,
    mirror_bracket,
    plaquette_phases,
    trace_nodal_lines,
    track_dirac_points,
    zak_vector,
)

PI_TOL = 0.05 * math.pi


def _is_pi(z: float) -> bool:
    return abs(abs(z) - math.pi) < PI_TOL


class TestZak:
    @pytest.mark.parametrize(
        "label, expected",
        [("NT", (False, False)), ("TX", (True, False)), ("TY", (False, True)), ("TXY", (True, True))],
    )
    def test_labeled_points(self, label, expected):
        zak = zak_vector(hoppings(label), lines=51, steps=201)
        assert (_is_pi(zak.zx), _is_pi(zak.zy)) == expected
        assert zak.is_pi() == expected
        assert zak.per_line_std < 0.01 * math.pi

    def test_zero_components_near_zero(self):
        zak = zak_vector(hoppings("NT"), lines=31, steps=128)
        assert abs(zak.zx) < PI_TOL and abs(zak.zy) < PI_TOL

    def test_semimetal_not_quantized(self, sm_hoppings):
        with pytest.raises((NotGapped, NonQuantized)):
            zak_vector(sm_hoppings, lines=51, steps=201)

    def test_single_line(self):
        phase = line_berry_phase(hoppings("TX"), "x", 0.3)
        assert abs(abs(phase) - math.pi) < 1e-6

    def test_too_few_steps(self):
        with pytest.raises(ValueError):
            line_berry_phase(hoppings("TX"), "x", 0.0, steps=10)

    def test_line_through_touching(self):
        h = hopping_for_closing("G", hoppings("TX"))
        with pytest.raises(DegeneratePoint):
            line_berry_phase(h, "x", 0.0, steps=128)


class TestDiracPoints:
    def test_semimetal_pair(self, sm_hoppings):
        points = dirac_points(sm_hoppings)
        assert len(points) == 2
        p, q = points
        assert p.k.kx == pytest.approx(-q.k.kx, abs=1e-8)
        assert p.k.ky == pytest.approx(-q.k.ky, abs=1e-8)
        assert sorted(pt.charge for pt in points) == [-1, 1]
        for pt in points:
            assert bands(sm_hoppings, pt.k.kx, pt.k.ky).gap < 1e-10
            assert pt.anisotropy > 1.0
            assert math.hypot(*pt.tilt) > 0.0

    def test_chiral_limit_removes_tilt(self, sm_hoppings):
        for pt in dirac_points(sm_hoppings.with_overrides(0.0, 0.0)):
            assert math.hypot(*pt.tilt) < 1e-10

    def test_cone_model_near_point(self, sm_hoppings):
        pt = dirac_points(sm_hoppings)[0]
        cone = characterize_cone(sm_hoppings, pt.k)
        rng = np.random.default_rng(3)
        for angle in rng.uniform(0.0, 2.0 * math.pi, size=8):
            q = 1e-4 * np.array([math.cos(angle), math.sin(angle)])
            b = bands(sm_hoppings, pt.k.kx + q[0], pt.k.ky + q[1])
            n0 = diagonal(sm_hoppings, pt.k.kx, pt.k.ky)
            lo, hi = cone_model(cone, q)
            assert b.e_minus - n0 == pytest.approx(float(lo), abs=1e-6)
            assert b.e_plus - n0 == pytest.approx(float(hi), abs=1e-6)

    def test_charge_independent_of_loop(self, sm_hoppings):
        for pt in dirac_points(sm_hoppings):
            charges = {
                dirac_charge(sm_hoppings, pt.k, radius=r, samples=s)
                for r in (0.02, 0.05, 0.1)
                for s in (64, 256, 1024)
            }
            assert charges == {pt.charge}

    def test_loop_around_pair_has_no_charge(self, sm_hoppings):
        points = dirac_points(sm_hoppings)
        assert all(math.hypot(pt.k.kx, pt.k.ky) < 1.4 for pt in points)
        assert dirac_charge(sm_hoppings, Momentum(0.0, 0.0), radius=1.5) == 0

    def test_loop_settings_threaded(self, sm_hoppings):
        points = dirac_points(sm_hoppings, 101, loop_radius=0.05, loop_samples=64)
        assert sorted(pt.charge for pt in points) == [-1, 1]
        with pytest.raises(ValueError):
            dirac_points(sm_hoppings, 101, loop_samples=16)

    def test_loop_through_node(self, sm_hoppings):
        pt = dirac_points(sm_hoppings)[0]
        center = Momentum(pt.k.kx + 0.1, pt.k.ky)
        with pytest.raises(LoopThroughNode):
            dirac_charge(sm_hoppings, center, radius=0.1)

    def test_gapped_point_has_no_zeros(self):
        search = locate_dirac_points(hoppings("TX"), 101)
        assert search.points == []
        assert not search.extended

    def test_nodal_point_reports_extended(self, mirror_hoppings):
        search = locate_dirac_points(mirror_hoppings, 101)
        assert search.extended
        with pytest.raises(NotGapped):
            dirac_points(mirror_hoppings, 101)

    def test_merging_exponents(self):
        h = hopping_for_closing("X", hoppings("TX"))
        linear, quadratic = merging_exponents(h, Momentum(math.pi, 0.0))
        assert linear == pytest.approx(1.0, abs=0.1)
        assert quadratic == pytest.approx(2.0, abs=0.1)

    def test_merging_cone_is_degenerate(self):
        h = hopping_for_closing("X", hoppings("TX"))
        with pytest.raises(DegenerateCone):
            characterize_cone(h, Momentum(math.pi, 0.0))

    def test_tracking_keeps_charges(self):
        path = [GeometryConfig(0.6 + 0.002 * i, 0.6 + 0.002 * i) for i in range(3)]
        tracks = track_dirac_points(path, seed_grid=101, workers=1, quiet=True)
        assert [len(t) for t in tracks] == [2, 2, 2]
        first = [p.charge for p in tracks[0]]
        for step in tracks[1:]:
            assert [p.charge for p in step] == first


    def test_tracks_continuous_as_step_shrinks(self):
        def largest_jump(step: float) -> float:
            path = [GeometryConfig(0.6 + step * i, 0.6 + step * i) for i in range(4)]
            tracks = track_dirac_points(path, seed_grid=101, workers=1, quiet=True)
            return max(
                float(periodic_distance(a.k.as_array(), b.k.as_array()))
                for prev, cur in zip(tracks, tracks[1:])
                for a, b in zip(prev, cur)
            )

        coarse, fine = largest_jump(0.004), largest_jump(0.001)
        assert fine < 0.5 * coarse
        assert fine < 0.05

    def test_merging_at_located_boundary(self):
        closing = locate_closing(GeometryConfig(0.2, 0.2), GeometryConfig(0.8, 0.2), "G")
        linear, quadratic = merging_exponents(hopping_set(closing), Momentum(0.0, 0.0))
        assert linear == pytest.approx(1.0, abs=0.1)
        assert quadratic == pytest.approx(2.0, abs=0.1)


class TestNodalLines:
    def test_mirror_detection(self, mirror_hoppings, sm_hoppings):
        assert is_mirror_symmetric(mirror_hoppings)
        assert not is_mirror_symmetric(sm_hoppings)

    def test_vertices_lie_on_line(self, mirror_hoppings):
        nodal = trace_nodal_lines(mirror_hoppings, grid=101)
        assert nodal
        v = nodal.vertices
        assert len(v) > 10
        assert np.max(np.abs(mirror_bracket(mirror_hoppings, v[:, 0], v[:, 1]))) < 1e-6
        assert np.max(bands(mirror_hoppings, v[:, 0], v[:, 1]).gap) < 1e-6

    def test_extended_zeros_off_mirror(self):
        # n = e^{-i kx} - 1 vanishes on the whole kx = 0 line
        h = HoppingSet(jxp=-1.0, jx=1.0, jyp=0.0, jy=0.0, j2x=0.3, j2y=0.2)
        assert not is_mirror_symmetric(h)
        nodal = trace_nodal_lines(h, grid=101)
        v = nodal.vertices
        assert len(v) > 10
        assert np.max(np.abs(v[:, 0])) < 1e-5
        assert np.ptp(v[:, 1]) > 6.0
        assert np.max(bands(h, v[:, 0], v[:, 1]).gap) < 1e-5

    def test_off_mirror_gapped(self):
        h = hopping_set(GeometryConfig(0.52, 0.5))
        nodal = trace_nodal_lines(h, grid=101)
        assert not nodal


class TestCurvature:
    @pytest.mark.parametrize("label", ["NT", "TX", "TY", "TXY"])
    def test_flat_and_trivial(self, label):
        curv = berry_curvature_map(hoppings(label), grid=101)
        assert curv.max_abs < 1e-6
        assert curv.chern == 0

    @pytest.mark.parametrize("label", ["NT", "TX", "TY", "TXY"])
    def test_chern_stable_under_refinement(self, label):
        h = hoppings(label)
        assert berry_curvature_map(h, grid=51).chern == berry_curvature_map(h, grid=101).chern

    def test_gauge_invariance(self, rng):
        h = hoppings("TX")
        k = np.linspace(-math.pi, math.pi, 21)
        kx, ky = np.meshgrid(k, k, indexing="ij")
        states = lower_band_state(h, kx, ky)
        rotated = states * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, size=kx.shape))[..., None]
        assert np.allclose(plaquette_phases(states), plaquette_phases(rotated), atol=1e-12)

    def test_semimetal_rejected(self):
        h = hopping_for_closing("G", hoppings("TX"))
        with pytest.raises(DegeneratePoint):
            berry_curvature_map(h, grid=21)
