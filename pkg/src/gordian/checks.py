"""
Self-checks behind ``gordian invariants``.

Each check is a small, seeded property test of one module. They are meant
as a smoke screen for an installed copy; the test suite goes further.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .cone import ConeMetric, cone_distance, cone_over, dotted_components, radial_projection_length
from .construction import GordianSpec, build_l1, build_link, stadium_length, validate_construction
from .errors import GenericityError, GeometryError
from .geom import PolyCurve, centroid, curve_length, linking_number, min_curve_distance, regular_polygon
from .isoperimetric import (DiskConfig, regular_polygon_centers, sample_and_sweep, verify_n_disk_bound,
                            verify_three_disk_bound)
from .thickness import SpatialGrid, cross_clearance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "seconds": round(self.seconds, 3)}


def _stadium_length(seed: int) -> tuple[bool, str]:
    err = abs(curve_length(build_l1(GordianSpec(n1=4096))) - stadium_length())
    return err <= 1e-5, f"|length - (4 pi + 4)| = {err:.3g}"


def _construction(seed: int) -> tuple[bool, str]:
    link = build_link(GordianSpec(n1=128))
    rep = validate_construction(*link.components, seed=seed)
    return rep.conditions_ok and rep.determinant == 3, (
        f"thickness {rep.thickness:.5f}, determinant {rep.determinant}, lk {rep.linking_number}")


def _isoperimetric(seed: int) -> tuple[bool, str]:
    worst = min(m.margin for _, m in sample_and_sweep(1000, seed))
    eq = verify_three_disk_bound(DiskConfig.from_sides(2.0, 2.0, 2.0)).margin
    poly = [verify_n_disk_bound(DiskConfig(regular_polygon_centers(n))).margin for n in (2, 4, 5)]
    ok = worst >= -1e-9 and abs(eq) <= 1e-9 and all(abs(p) <= 1e-9 for p in poly)
    return ok, f"min margin {worst:.4f}, equality cases {max(map(abs, [eq] + poly)):.2g}"


def _clearance_grid(seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(10):
        c1 = PolyCurve(np.cumsum(rng.normal(size=(200, 3)) * 0.4, axis=0), closed=True)
        c2 = PolyCurve(np.cumsum(rng.normal(size=(200, 3)) * 0.4, axis=0) + rng.normal(size=3), closed=True)
        grid = SpatialGrid([c1, c2], cell_size=float(rng.uniform(0.5, 2.0)))
        bad += cross_clearance(c1, c2, grid) != min_curve_distance(c1, c2)
    return bad == 0, f"{bad} of 10 mismatches"


def _cone_metric(seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_tri, worst_proj = -math.inf, -math.inf
    for a in (2 * math.pi, 3 * math.pi, 4 * math.pi):
        m = ConeMetric(a)
        pts = np.column_stack([rng.uniform(0, 3, (300, 3)).ravel(), rng.uniform(0, a, 900)]).reshape(300, 3, 2)
        for p, q, r in pts:
            worst_tri = max(worst_tri, cone_distance(m, p, r) - cone_distance(m, p, q) - cone_distance(m, q, r))
        for _ in range(50):
            curve = np.column_stack([rng.uniform(1, 3, 8), rng.uniform(0, a, 8)])
            before, after = radial_projection_length(m, curve, 1.0)
            worst_proj = max(worst_proj, after - before)
    return worst_tri <= 1e-9 and worst_proj <= 1e-12, (
        f"max triangle excess {worst_tri:.2g}, max projection gain {worst_proj:.2g}")


def _dots_at_rest(seed: int) -> tuple[bool, str]:
    link = build_link(GordianSpec(n1=64, straight_edges=3))
    l1, l2 = link.components
    rep = dotted_components(cone_over(l1, centroid(l1)), l2, link.radius)
    signs = sorted(s for c in rep.components for s in c.dot_signs)
    return rep.dotted_count == 2 and signs == [-1, 1], f"dotted {rep.dotted_count}, signs {signs}"


def _dot_parity(seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = tried = 0
    while tried < 20:
        b = regular_polygon(40, rng.uniform(1.5, 3), normal=rng.normal(size=3))
        c = regular_polygon(40, rng.uniform(1, 3), center=rng.normal(size=3), normal=rng.normal(size=3))
        try:
            lk = linking_number(b, c)
            rep = dotted_components(cone_over(b, centroid(b)), c, 0.3)
        except (GenericityError, GeometryError):
            continue
        tried += 1
        bad += rep.total_signed_dots != lk
    return bad == 0, f"{bad} of {tried} mismatches"


CHECKS = {
    "stadium_length": _stadium_length,
    "construction": _construction,
    "isoperimetric": _isoperimetric,
    "clearance_grid": _clearance_grid,
    "cone_metric": _cone_metric,
    "dots_at_rest": _dots_at_rest,
    "dot_parity": _dot_parity,
}


def run_checks(seed: int = 0, names=None) -> list[CheckResult]:
    out = []
    for name in names or CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = CHECKS[name](seed)
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
        log.info("%s: %s (%s)", name, "pass" if ok else "FAIL", detail)
    return out
