import math

import numpy as np
import pytest

from gordian.construction import (A_POINT, B_POINT, GordianSpec, build_alpha, build_l1, build_l2,
                                  build_link, construct, extract_alpha, stadium_length,
                                  validate_construction, weld_mirror)
from gordian.errors import ConstructionError, ValidationError
from gordian.geom import curve_length, mirror_defect, point_curve_distance, reflect_xy, regular_polygon


def _dist_to_ab(points):
    x = np.clip(points[:, 0], -1.0, 1.0)
    foot = np.stack([x, np.zeros_like(x), np.zeros_like(x)], axis=1)
    return np.linalg.norm(points - foot, axis=1)


@pytest.fixture(scope="module")
def default_link():
    return build_link(GordianSpec())


class TestL1:
    def test_length_close_to_stadium(self):
        assert stadium_length() == pytest.approx(4 * math.pi + 4)
        err = stadium_length() - curve_length(build_l1(GordianSpec(n1=4096)))
        assert 0 < err <= 1e-5

    def test_length_increases_with_resolution(self):
        lengths = [curve_length(build_l1(GordianSpec(n1=n))) for n in range(64, 1100, 97)]
        assert np.all(np.diff(lengths) > 0)

    @pytest.mark.parametrize("straight", [1, 3, 8])
    def test_vertices_on_offset_curve(self, straight):
        l1 = build_l1(GordianSpec(n1=256, straight_edges=straight))
        assert len(l1) == 256
        assert not l1.vertices[:, 2].any()
        assert np.abs(_dist_to_ab(l1.vertices) - 2.0).max() < 1e-12

    def test_clearance_scales_offset(self):
        l1 = build_l1(GordianSpec(n1=256, clearance=3.0))
        assert np.abs(_dist_to_ab(l1.vertices) - 3.0).max() < 1e-12


class TestL2:
    def test_mirror_symmetric(self, default_link):
        l2 = default_link.components[1]
        assert mirror_defect(l2) == 0.0
        flipped = reflect_xy(l2).vertices
        n = len(l2)
        assert np.array_equal(flipped[(-np.arange(n)) % n], l2.vertices)

    def test_alpha_runs_from_a_to_b_above_plane(self):
        alpha = build_alpha(GordianSpec(n2=256))
        assert len(alpha) == 129
        assert np.array_equal(alpha[0], A_POINT) and np.array_equal(alpha[-1], B_POINT)
        assert alpha[1:-1, 2].min() > 0

    def test_extract_alpha_round_trip(self):
        alpha = build_alpha(GordianSpec())
        assert np.array_equal(extract_alpha(weld_mirror(alpha)), alpha)
        assert extract_alpha(regular_polygon(12)) is None

    def test_vertical_at_a_and_b(self, default_link):
        v = default_link.components[1].vertices
        n = len(v)
        for i in np.flatnonzero(v[:, 2] == 0):
            for e in (v[(i + 1) % n] - v[i], v[i] - v[i - 1]):
                assert e[0] == 0 and e[1] == 0

    def test_l2_thick_on_its_own(self):
        assert build_l2(GordianSpec()) is not None

    def test_l2_keeps_clear_of_l1(self, default_link):
        l1, l2 = default_link.components
        assert point_curve_distance(l2.vertices, l1).min() >= 2 - 1e-3


class TestValidation:
    def test_default_passes(self, default_link):
        rep = validate_construction(*default_link.components)
        assert rep.conditions_ok and rep.alpha_knotted
        assert rep.determinant == 3 and rep.linking_number == 0
        assert rep.thickness >= 1 - 1e-3
        assert rep.perpendicularity_defect <= 1e-9
        assert rep.l1_length == pytest.approx(4 * math.pi + 4, abs=1e-4)

    def test_unknotted_arc_rejected(self):
        link = build_link(GordianSpec(n1=128, knot_template="unknot-arc"))
        rep = validate_construction(*link.components)
        assert not rep.alpha_knotted and rep.determinant == 1 and not rep.conditions_ok

    def test_round_l2_rejected(self):
        rep = validate_construction(build_l1(GordianSpec(n1=128)), regular_polygon(64, 3.0, center=(0, 0, 12)))
        assert not rep.conditions_ok
        assert any("z = 0" in n for n in rep.notes)

    def test_tight_clearance_fails(self):
        spec = GordianSpec(n1=256, clearance=1.5)
        rep = validate_construction(*build_link(spec).components)
        assert rep.thickness < 0.9 and not rep.conditions_ok
        with pytest.raises(ConstructionError):
            construct(spec)

    def test_report_dict_is_json_safe(self):
        rep = validate_construction(build_l1(GordianSpec(n1=128)), regular_polygon(64, 3.0, center=(0, 0, 12)))
        d = rep.to_dict()
        assert d["alpha_min_z"] is None and isinstance(d["notes"], list)


class TestSpec:
    def test_json_round_trip(self):
        spec = GordianSpec(n1=512, n2=200, straight_edges=4, lift=2.5)
        assert GordianSpec.from_json(spec.to_json()) == spec

    @pytest.mark.parametrize("kwargs", [
        {"n1": 10}, {"n1": 100.5}, {"n2": 130.0 + 1}, {"n2": 64}, {"clearance": 0.0},
        {"clearance": math.inf}, {"straight_edges": 0}, {"knot_template": "figure-eight"}, {"lift": -1.0},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValidationError):
            GordianSpec(**kwargs)

    def test_rejects_unknown_keys_and_bad_json(self):
        with pytest.raises(ValidationError):
            GordianSpec.from_dict({"n1": 128, "colour": "red"})
        with pytest.raises(ValidationError):
            GordianSpec.from_json("[1, 2]")
        with pytest.raises(ValidationError):
            GordianSpec.from_json("{n1: 3")

    def test_template_that_cannot_fit(self):
        with pytest.raises(ConstructionError):
            build_alpha(GordianSpec(margin=5.0))
