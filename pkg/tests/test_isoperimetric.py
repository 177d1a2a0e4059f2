import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gordian.errors import ValidationError
from gordian.isoperimetric import (DiskConfig, convex_hull, hull_perimeter, in_convex_position,
                                   parallel_body_length, regular_polygon_centers, sample_and_sweep, sweep_csv,
                                   verify_n_disk_bound, verify_three_disk_bound)
from oracles import cauchy_perimeter

FOUR_PI = 4 * math.pi


class TestParallelBody:
    def test_equilateral(self):
        assert parallel_body_length(regular_polygon_centers(3), 2.0) == pytest.approx(FOUR_PI + 6, abs=1e-12)
        assert FOUR_PI + 6 == pytest.approx(18.566, abs=1e-3)

    def test_two_centres(self):
        assert parallel_body_length([[0, 0], [2, 0]], 2.0) == pytest.approx(FOUR_PI + 4, abs=1e-12)

    def test_one_centre(self):
        assert parallel_body_length([[3.0, -1.0]], 2.0) == pytest.approx(FOUR_PI, abs=1e-12)

    def test_empty_and_bad_offset(self):
        with pytest.raises(ValidationError):
            parallel_body_length(np.zeros((0, 2)), 2.0)
        with pytest.raises(ValidationError):
            parallel_body_length([[0, 0]], 0.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 9))
    def test_matches_support_function(self, seed, n):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-5, 5, (n, 2))
        off = rng.uniform(0.5, 3)
        assert parallel_body_length(pts, off) == pytest.approx(cauchy_perimeter(pts, off), abs=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_rigid_motion_and_offset(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-5, 5, (6, 2))
        a = rng.uniform(0, 2 * np.pi)
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        moved = pts @ rot.T + rng.normal(size=2)
        assert parallel_body_length(moved, 2.0) == pytest.approx(parallel_body_length(pts, 2.0), abs=1e-11)
        assert parallel_body_length(pts, 3.0) - parallel_body_length(pts, 1.0) == pytest.approx(4 * math.pi,
                                                                                              abs=1e-11)

    def test_hull_drops_interior_and_collinear_points(self):
        pts = [[0, 0], [2, 0], [1, 0], [1, 1], [2, 2], [0, 2], [1, 2]]
        h = convex_hull(pts)
        assert len(h) == 4 and hull_perimeter(pts) == 8.0
        assert not in_convex_position(pts)


class TestThreeDisks:
    def test_equilateral_equality(self):
        m = verify_three_disk_bound(DiskConfig.from_sides(2, 2, 2))
        assert m.bound == pytest.approx(FOUR_PI + 6, abs=1e-12) and abs(m.margin) <= 1e-9

    def test_isoceles(self):
        cfg = DiskConfig.from_sides(2, 2, 3)
        assert verify_three_disk_bound(cfg).margin == pytest.approx(1.0, abs=1e-9)
        assert cauchy_perimeter(cfg.centers, 2.0) - (FOUR_PI + 6) == pytest.approx(1.0, abs=1e-6)

    def test_overlapping(self):
        with pytest.raises(ValidationError):
            DiskConfig.from_sides(2, 2, 1.5)

    def test_not_a_triangle(self):
        with pytest.raises(ValidationError):
            DiskConfig.from_sides(2, 2, 5)

    def test_wrong_count(self):
        with pytest.raises(ValidationError):
            verify_three_disk_bound(DiskConfig(regular_polygon_centers(4)))

    def test_collinear_is_valid(self):
        m = verify_three_disk_bound(DiskConfig.from_sides(2, 4, 2))
        assert m.margin == pytest.approx(2.0, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(2, 6), st.floats(2, 6), st.floats(2, 6), st.floats(0, 1))
    def test_monotone_in_each_side(self, a, b, c, bump):
        if not (a <= b + c and b <= a + c and c <= a + b):
            return
        if not (a + bump <= b + c):
            return
        lo = verify_three_disk_bound(DiskConfig.from_sides(a, b, c)).margin
        hi = verify_three_disk_bound(DiskConfig.from_sides(a + bump, b, c)).margin
        assert hi >= lo - 1e-12


class TestPolygons:
    @pytest.mark.parametrize("n", [2, 4, 5, 6, 9])
    def test_regular(self, n):
        m = verify_n_disk_bound(DiskConfig(regular_polygon_centers(n)))
        assert m.bound == pytest.approx(FOUR_PI + 2 * n, abs=1e-12)
        assert abs(m.margin) <= 1e-9

    def test_pattern_starts_at_circle(self):
        assert parallel_body_length(regular_polygon_centers(2)[:1], 2.0) == pytest.approx(FOUR_PI)

    def test_interior_centre(self):
        pts = np.vstack([regular_polygon_centers(3, 6.0), [[0.0, 0.0]]])
        with pytest.raises(ValidationError):
            verify_n_disk_bound(DiskConfig(pts))

    def test_single_centre(self):
        with pytest.raises(ValidationError):
            verify_n_disk_bound(DiskConfig([[0.0, 0.0]]))


class TestSweep:
    def test_acceptance_sized_sweep(self):
        res = sample_and_sweep(10_000, seed=3)
        assert len(res) == 10_000
        assert min(m.margin for _, m in res) >= -1e-9
        sides = np.array([s for s, _ in res])
        assert sides.min() >= 2.0 and sides.max() <= 6.0

    def test_deterministic_per_trial(self):
        a = sample_and_sweep(50, seed=8)
        b = sample_and_sweep(20, seed=8)
        assert [s for s, _ in a[:20]] == [s for s, _ in b]

    def test_forced_equilateral(self):
        (sides, m), = sample_and_sweep(1, seed=0, force_equilateral=True)
        assert sides == (2.0, 2.0, 2.0) and abs(m.margin) <= 1e-9

    @pytest.mark.parametrize("trials", [0, -3, 2.5])
    def test_bad_trials(self, trials):
        with pytest.raises(ValidationError):
            sample_and_sweep(trials)

    def test_csv(self):
        text = sweep_csv(sample_and_sweep(3, seed=1))
        rows = text.strip().split("\n")
        assert rows[0] == "trial,d12,d13,d23,achieved,bound,margin" and len(rows) == 4
        vals = [float(x) for x in rows[1].split(",")]
        assert vals[4] - vals[5] == pytest.approx(vals[6])
