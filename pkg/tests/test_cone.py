import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gordian.cone import (ConeMetric, cone_angle, cone_distance, cone_over, dotted_components, find_dots,
                          radial_projection_length, refinement_level, refined_mesh)
from gordian.construction import GordianSpec, build_l1, build_link
from gordian.errors import GenericityError, GeometryError, ValidationError
from gordian.geom import PolyCurve, centroid, linking_number, regular_polygon
from oracles import unrolled_cone_distance

ANGLES = [2 * math.pi, 2.5 * math.pi, 3 * math.pi, 4 * math.pi]


def _bumpy_circle(n, amp=0.5, waves=2):
    t = 2 * np.pi * np.arange(n) / n
    return PolyCurve(np.stack([np.cos(t), np.sin(t), amp * np.cos(waves * t)], axis=1))


def _spherical_length(amp=0.5, waves=2):
    """Length of the central projection of the smooth bumpy circle onto the unit sphere."""
    def speed(t):
        g = np.array([math.cos(t), math.sin(t), amp * math.cos(waves * t)])
        dg = np.array([-math.sin(t), math.cos(t), -amp * waves * math.sin(waves * t)])
        r = np.linalg.norm(g)
        u = g / r
        return np.linalg.norm(dg - (u @ dg) * u) / r
    return quad(speed, 0, 2 * math.pi, limit=200, epsabs=1e-13)[0]


class TestConeAngle:
    def test_flat_disk(self):
        d = cone_over(regular_polygon(4096), (0, 0, 0))
        assert abs(cone_angle(d) - 2 * math.pi) <= 1e-9
        assert d.n_triangles == 4096

    def test_stadium_from_centroid(self):
        l1 = build_l1(GordianSpec())
        assert abs(cone_angle(cone_over(l1, centroid(l1))) - 2 * math.pi) <= 1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_planar_convex_interior_apex(self, seed):
        rng = np.random.default_rng(seed)
        th = np.sort(rng.uniform(0, 2 * np.pi, 12))
        if np.diff(np.concatenate([th, th[:1] + 2 * np.pi])).max() >= np.pi:
            return
        if np.diff(th).min() < 1e-3:
            return
        c = PolyCurve(np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=1))
        w = rng.dirichlet(np.ones(12))
        assert abs(cone_angle(cone_over(c, w @ c.vertices)) - 2 * math.pi) <= 1e-9

    def test_bumpy_boundary_exceeds_flat(self):
        exact = _spherical_length()
        coarse = cone_angle(cone_over(_bumpy_circle(2048), (0, 0, 0)))
        fine = cone_angle(cone_over(_bumpy_circle(4096), (0, 0, 0)))
        assert 2 * math.pi < coarse < fine <= exact
        assert exact - fine < 1e-5 and (exact - coarse) == pytest.approx(4 * (exact - fine), rel=1e-2)

    def test_apex_outside(self):
        # the circle is seen under an angle of 2 asin(1 / D), covered twice
        D = 5.0
        d = cone_over(regular_polygon(8192), (D, 0, 0))
        assert cone_angle(d) == pytest.approx(4 * math.asin(1 / D), abs=1e-6)
        assert cone_angle(d) < 2 * math.pi

    def test_apex_on_boundary(self):
        with pytest.raises(GeometryError):
            cone_over(regular_polygon(8), (1, 0, 0))

    def test_normals_follow_orientation(self):
        d = cone_over(regular_polygon(16), (0, 0, 0))
        assert np.all(d.normals()[:, 2] > 0)


class TestConeDistance:
    def test_examples(self):
        assert cone_distance(ConeMetric(2 * math.pi), (1, 0), (1, math.pi)) == pytest.approx(2.0, abs=1e-15)
        assert cone_distance(ConeMetric(3 * math.pi), (1, 0), (1, 1.5 * math.pi)) == 2.0
        assert unrolled_cone_distance(3 * math.pi, (1, 0), (1, 1.5 * math.pi)) == pytest.approx(2.0, abs=1e-6)
        assert cone_distance(ConeMetric(3 * math.pi), (2.5, 1.0), (0.0, 4.0)) == 2.5

    def test_angle_wraps(self):
        m = ConeMetric(2.5 * math.pi)
        a = cone_distance(m, (1.0, 0.2), (2.0, 1.0))
        assert cone_distance(m, (1.0, 0.2 + 2.5 * math.pi), (2.0, 1.0 - 5 * math.pi)) == pytest.approx(a, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValidationError):
            ConeMetric(1.5 * math.pi)
        with pytest.raises(ValidationError):
            cone_distance(ConeMetric(3 * math.pi), (-1, 0), (1, 0))

    def test_matches_unrolled_search(self):
        rng = np.random.default_rng(11)
        for k in range(100):
            a = ANGLES[k % 4]
            p1 = (rng.uniform(0.1, 3), rng.uniform(0, a))
            p2 = (rng.uniform(0.1, 3), rng.uniform(0, a))
            assert cone_distance(ConeMetric(a), p1, p2) == pytest.approx(unrolled_cone_distance(a, p1, p2),
                                                                          abs=1e-6)

    @pytest.mark.parametrize("a", ANGLES)
    def test_triangle_inequality(self, a):
        rng = np.random.default_rng(int(a * 100))
        m = ConeMetric(a)
        pts = np.stack([rng.uniform(0, 4, (10_000, 3)), rng.uniform(0, a, (10_000, 3))], axis=-1)
        for p, q, r in pts:
            assert cone_distance(m, p, r) <= cone_distance(m, p, q) + cone_distance(m, q, r) + 1e-12


class TestRadialProjection:
    def test_circle_is_fixed(self):
        th = np.linspace(0, 2 * np.pi, 101)
        before, after = radial_projection_length(ConeMetric(2 * math.pi), np.column_stack([np.full(101, 2.0), th]), 2.0)
        assert after == pytest.approx(4 * math.pi, rel=1e-14) and before == pytest.approx(after, rel=1e-14)

    def test_spoke(self):
        before, after = radial_projection_length(ConeMetric(2 * math.pi), [[3.0, 0.7], [2.0, 0.7]], 2.0)
        assert after == 0.0 and before == pytest.approx(1.0, rel=1e-15)

    def test_spiral_length(self):
        # r = 2 + t, theta = t for t in [0, 1]: exact length from the closed form
        before, _ = radial_projection_length(ConeMetric(3 * math.pi), [[2.0, 0.0], [3.0, 1.0]], 1.0)
        exact = quad(lambda t: math.hypot(1.0, 2.0 + t), 0, 1)[0]
        assert before == pytest.approx(exact, rel=1e-12)

    def test_random_curves(self):
        rng = np.random.default_rng(5)
        for k in range(1000):
            a = ANGLES[k % 4] if k % 2 else 2.5 * math.pi
            curve = np.column_stack([rng.uniform(2, 5, 100), rng.uniform(0, a, 100)])
            before, after = radial_projection_length(ConeMetric(a), curve, 2.0)
            assert after <= before

    def test_point_below_target(self):
        with pytest.raises(ValidationError):
            radial_projection_length(ConeMetric(2 * math.pi), [[3.0, 0.0], [1.0, 1.0]], 2.0)


@pytest.fixture(scope="module")
def rest_report():
    link = build_link(GordianSpec(n1=64, straight_edges=3))
    l1, l2 = link.components
    disk = cone_over(l1, centroid(l1))
    return disk, l2, dotted_components(disk, l2, link.radius)


class TestDottedComponents:
    def test_link_at_rest(self, rest_report):
        _, _, rep = rest_report
        assert rep.dotted_count == 2 and len(rep.dots) == 2
        assert sorted(len(c.dot_signs) for c in rep.components if c.contains_dot) == [1, 1]
        assert sorted(d.sign for d in rep.dots) == [-1, 1] and rep.total_signed_dots == 0

    def test_stable_under_refinement(self, rest_report):
        disk, l2, rep = rest_report
        finer = dotted_components(disk, l2, 1.0, refine=refinement_level(disk, 1.0) + 1)
        assert finer.dotted_count == rep.dotted_count
        assert sorted(s for c in finer.components for s in c.dot_signs) == sorted(
            s for c in rep.components for s in c.dot_signs)

    def test_refined_triangles_are_small(self, rest_report):
        disk = rest_report[0]
        k = refinement_level(disk, 1.0)
        pts, faces, _, _ = refined_mesh(disk, k)
        tri = pts[faces]
        sides = np.linalg.norm(tri - np.roll(tri, 1, axis=1), axis=2)
        assert sides.max() < 0.25

    def test_distant_circle(self):
        disk = cone_over(regular_polygon(48, 3.0), (0, 0, 0))
        rep = dotted_components(disk, regular_polygon(32, 1.0, center=(0, 0, 20)), 1.0)
        assert rep.dotted_count == 0 and rep.components == () and rep.total_signed_dots == 0

    def test_hopf_single_dot(self):
        disk = cone_over(regular_polygon(64, 2.0), (0, 0, 0))
        rep = dotted_components(disk, regular_polygon(64, 2.0, center=(2, 0, 0), normal=(0, 1, 0)), 0.5)
        assert rep.dotted_count == 1 and abs(rep.total_signed_dots) == 1

    def test_signed_dots_equal_linking(self):
        rng = np.random.default_rng(99)
        done = 0
        while done < 50:
            th = 2 * np.pi * np.arange(40) / 40
            wobble = rng.uniform(0, 0.4)
            b = PolyCurve(np.stack([2.5 * np.cos(th), 2.5 * np.sin(th), wobble * np.sin(3 * th)], axis=1)
                          ).transformed(rotation=_rotation(rng))
            c = regular_polygon(40, rng.uniform(0.8, 3), center=rng.normal(size=3) * 1.5, normal=rng.normal(size=3))
            try:
                lk = linking_number(b, c)
                rep = dotted_components(cone_over(b, centroid(b)), c, 0.3)
            except (GenericityError, GeometryError):
                continue
            done += 1
            assert rep.total_signed_dots == lk

    def test_tangent_core_is_not_generic(self):
        disk = cone_over(regular_polygon(16, 2.0), (0, 0, 0))
        # the core runs along the disk through the apex region
        core = PolyCurve([[-0.5, 0.1, 0.0], [0.5, 0.1, 0.0], [0.0, 0.1, 1.0]])
        with pytest.raises(GenericityError):
            find_dots(disk, core)

    def test_report_dict(self, rest_report):
        d = rest_report[2].to_dict()
        assert d["dotted_count"] == 2 and len(d["dots"]) == 2

    def test_bad_radius(self, rest_report):
        disk, l2, _ = rest_report
        with pytest.raises(ValidationError):
            dotted_components(disk, l2, 0.0)


def _rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    return q * np.sign(np.diag(r))
