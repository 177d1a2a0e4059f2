"""
Explicit two-component link built from a knotted arc and a stadium curve.

``L1`` is the boundary of the radius-``clearance`` neighbourhood of the unit
segment ``AB`` (A = (1, 0, 0), B = (-1, 0, 0)) in the plane ``z = 0``. ``L2``
is an arc ``alpha`` from A to B in the upper half space, welded to its mirror
image through ``z = 0``. The arc is a vertical post out of A, a cubic
connector, a cut-open (2, 3) torus knot lifted above the plane, a second
connector and a post back down to B. Closing ``alpha`` with the chord
``AB`` gives a trefoil, which :func:`validate_construction` certifies.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import ConstructionError, GenericityError, ValidationError
from .geom import PolyCurve, ThickLink, curve_length, linking_number, regular_polygon
from .knots import certify_knotted
from .thickness import link_thickness, min_radius_of_curvature, strand_clearance

log = logging.getLogger(__name__)

A_POINT = np.array([1.0, 0.0, 0.0])
B_POINT = np.array([-1.0, 0.0, 0.0])
THICKNESS_TOL = 5e-3
PERP_TOL = 1e-9


@dataclass(frozen=True)
class Template:
    """A closed curve ``f(t)`` on ``[0, 2 pi]`` that gets cut open near ``t = 0``.

    ``t = 0`` must be an outermost point so that, after rotating the outward
    normal to ``-z``, the cut lies at the bottom of the lifted curve.
    """

    point: Callable[[np.ndarray], np.ndarray]
    tangent: Callable[[np.ndarray], np.ndarray]
    extent: float


def _torus_curve(R: float = 3.0, r: float = 1.5, q: int = 3) -> Template:
    """``(2, q)`` torus curve: a trefoil for ``q = 3``, unknotted for ``q = 1``."""
    def point(t):
        return np.stack([(R + r * np.cos(q * t)) * np.cos(2 * t),
                         (R + r * np.cos(q * t)) * np.sin(2 * t),
                         r * np.sin(q * t)], axis=-1)

    def tangent(t):
        rad = R + r * np.cos(q * t)
        return np.stack([-q * r * np.sin(q * t) * np.cos(2 * t) - 2 * rad * np.sin(2 * t),
                         -q * r * np.sin(q * t) * np.sin(2 * t) + 2 * rad * np.cos(2 * t),
                         q * r * np.cos(q * t)], axis=-1)

    return Template(point, tangent, R + r)


TEMPLATES: dict[str, Callable[[], Template]] = {
    "trefoil-arc": lambda: _torus_curve(q=3),
    "unknot-arc": lambda: _torus_curve(q=1),
}


@dataclass(frozen=True)
class GordianSpec:
    """Parameters of the construction.

    ``clearance`` is the offset radius of ``L1`` about ``AB``. The thick
    link needs it to be at least 2; smaller values are accepted here so that
    their failure can be reported by :func:`validate_construction`.
    """

    n1: int = 2048
    n2: int = 256
    clearance: float = 2.0
    straight_edges: int = 1
    knot_template: str = "trefoil-arc"
    post_height: float = 2.2
    lift: float = 2.0
    cut: float = 0.35
    arm: float = 2.0
    margin: float = 0.1
    max_scale: float = 3.0

    def __post_init__(self):
        if int(self.n1) != self.n1 or self.n1 < 64:
            raise ValidationError("n1 must be an integer >= 64")
        if int(self.n2) != self.n2 or self.n2 < 128 or self.n2 % 2:
            raise ValidationError("n2 must be an even integer >= 128")
        if int(self.straight_edges) != self.straight_edges or not 1 <= self.straight_edges <= self.n1 // 4:
            raise ValidationError("straight_edges must be an integer in [1, n1 / 4]")
        if not (self.clearance > 0 and math.isfinite(self.clearance)):
            raise ValidationError("clearance must be positive")
        if self.knot_template not in TEMPLATES:
            raise ValidationError(f"unknown knot template {self.knot_template!r}; "
                                  f"known: {sorted(TEMPLATES)}")
        for name in ("post_height", "lift", "cut", "arm", "max_scale"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> GordianSpec:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValidationError(f"unknown spec keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> GordianSpec:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"spec is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("spec JSON must be an object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class ConstructionReport:
    l1_length: float
    l2_length: float
    thickness: float
    alpha_knotted: bool
    perpendicularity_defect: float
    conditions_ok: bool
    linking_number: int | None = None
    determinant: int | None = None
    alpha_min_z: float = float("nan")
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        out = asdict(self)
        out["notes"] = list(self.notes)
        for k, v in out.items():
            if isinstance(v, float) and not math.isfinite(v):
                out[k] = None
        return out


# --------------------------------------------------------------------------
# L1
# --------------------------------------------------------------------------

def build_l1(spec: GordianSpec) -> PolyCurve:
    """Stadium polygon with every vertex on the smooth curve.

    Each straight side is split into ``spec.straight_edges`` equal edges and
    the remaining vertices go to the two caps. The polygon is inscribed,
    so its length is strictly below ``4 + 2 pi c``; with the straight
    subdivision fixed, every extra vertex refines a cap and the length
    increases strictly with ``n1``.
    """
    c = spec.clearance
    ks = int(spec.straight_edges)
    caps = spec.n1 - 2 * ks
    k_a = (caps + 1) // 2
    k_b = caps // 2
    ang_a = np.linspace(-np.pi / 2, np.pi / 2, k_a + 1)
    ang_b = np.linspace(np.pi / 2, 3 * np.pi / 2, k_b + 1)
    cap_a = np.stack([1 + c * np.cos(ang_a), c * np.sin(ang_a), np.zeros_like(ang_a)], axis=-1)
    cap_b = np.stack([-1 + c * np.cos(ang_b), c * np.sin(ang_b), np.zeros_like(ang_b)], axis=-1)
    # cos(+-pi/2) is not exactly zero; snap the junctions onto the straight sides
    for cap in (cap_a, cap_b):
        for idx in (0, -1):
            cap[idx, 0] = np.sign(cap[idx, 0])
            cap[idx, 1] = np.sign(cap[idx, 1]) * c
    x = 1.0 - 2.0 * np.arange(1, ks) / ks
    top = np.stack([x, np.full_like(x, c), np.zeros_like(x)], axis=-1)
    bottom = np.stack([-x, np.full_like(x, -c), np.zeros_like(x)], axis=-1)
    v = np.vstack([cap_a, top, cap_b, bottom])
    return PolyCurve(v, closed=True)


def stadium_length(clearance: float = 2.0) -> float:
    """Length of the smooth offset curve about ``AB``."""
    return 4.0 + 2.0 * math.pi * clearance


# --------------------------------------------------------------------------
# L2
# --------------------------------------------------------------------------

def _bezier(p0, p1, p2, p3, n: int = 400) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1 - t) ** 3 * p0 + 3 * (1 - t) ** 2 * t * p1 + 3 * (1 - t) * t ** 2 * p2 + t ** 3 * p3


def _dense_alpha(spec: GordianSpec, template: Template, scale: float) -> np.ndarray:
    u = template.tangent(np.array(0.0))
    u = u / np.linalg.norm(u)
    outward = template.point(np.array(0.0))
    outward = outward / np.linalg.norm(outward)
    down = -outward
    side = np.cross(down, u)
    rot = np.stack([u, side, down])
    ts = np.linspace(spec.cut, 2 * np.pi - spec.cut, 4000)
    body = (template.point(ts) @ rot.T) * scale
    body[:, 2] += template.extent * scale + spec.post_height + spec.lift
    ta = template.tangent(np.array(spec.cut)) @ rot.T
    tb = template.tangent(np.array(2 * np.pi - spec.cut)) @ rot.T
    ta /= np.linalg.norm(ta)
    tb /= np.linalg.norm(tb)
    up = np.array([0.0, 0.0, spec.arm])
    pa = A_POINT + [0.0, 0.0, spec.post_height]
    pb = B_POINT + [0.0, 0.0, spec.post_height]
    post_a = np.linspace(A_POINT, pa, 50)[:-1]
    con_a = _bezier(pa, pa + up, body[0] - spec.arm * ta, body[0])[:-1]
    con_b = _bezier(body[-1], body[-1] + spec.arm * tb, pb + up, pb)[1:]
    post_b = np.linspace(pb, B_POINT, 50)[1:]
    return np.vstack([post_a, con_a, body, con_b, post_b])


def _resample(dense: np.ndarray, m: int) -> np.ndarray:
    """``m`` edges of equal length along a dense polyline (endpoints kept)."""
    seg = np.linalg.norm(np.diff(dense, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.linspace(0.0, cum[-1], m + 1)
    out = np.stack([np.interp(s, cum, dense[:, k]) for k in range(3)], axis=-1)
    out[0], out[-1] = dense[0], dense[-1]
    return out


def weld_mirror(alpha: np.ndarray) -> PolyCurve:
    """Close an arc from A to B with its reflection through ``z = 0``.

    Vertex ``i`` of the result reflects to vertex ``-i mod n``.
    """
    mirror = alpha[1:-1][::-1].copy()
    mirror[:, 2] *= -1
    return PolyCurve(np.vstack([alpha, mirror]), closed=True)


def _template_ok(template: Template, scale: float, margin: float) -> bool:
    t = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    core = PolyCurve(template.point(t) * scale)
    need = 1.0 + margin
    return min_radius_of_curvature(core) >= need and strand_clearance(core) >= need


def build_alpha(spec: GordianSpec) -> np.ndarray:
    """Vertices of the upper arc, A first and B last (``n2 / 2`` edges)."""
    template = TEMPLATES[spec.knot_template]()
    scale = 1.0
    while not _template_ok(template, scale, spec.margin):
        scale *= 1.1
        if scale > spec.max_scale:
            raise ConstructionError(
                f"template {spec.knot_template!r} does not reach clearance "
                f"{2 * (1 + spec.margin):.3f} below scale {spec.max_scale}")
    log.debug("knot template scale %.3f", scale)
    return _resample(_dense_alpha(spec, template, scale), spec.n2 // 2)


def build_l2(spec: GordianSpec) -> PolyCurve:
    """Mirror-symmetric closed curve through A and B.

    Raises :class:`ConstructionError` when the assembled curve is not
    thick enough on its own.
    """
    l2 = weld_mirror(build_alpha(spec))
    rad = min_radius_of_curvature(l2)
    clear = strand_clearance(l2)
    if min(rad, clear) < 1.0 - THICKNESS_TOL:
        raise ConstructionError(
            f"L2 is too thin: min turning radius {rad:.4f}, strand clearance {clear:.4f}")
    return l2


def build_link(spec: GordianSpec) -> ThickLink:
    return ThickLink((build_l1(spec), build_l2(spec)), 1.0, {"spec": spec.to_dict()})


def alpha_closure(alpha: np.ndarray) -> PolyCurve:
    """The closed curve ``alpha`` followed by the chord from B back to A."""
    return PolyCurve(np.asarray(alpha, dtype=float), closed=True)


def extract_alpha(l2: PolyCurve, tol: float = 1e-9) -> np.ndarray | None:
    """Upper arc of a curve meeting ``z = 0`` at exactly two vertices.

    Returns ``None`` when the curve does not have that shape.
    """
    v = l2.vertices
    on = np.flatnonzero(np.abs(v[:, 2]) <= tol)
    if len(on) != 2:
        return None
    i, j = on
    first = v[i:j + 1]
    second = np.vstack([v[j:], v[:i + 1]])
    for arc in (first, second):
        inner = arc[1:-1, 2]
        if len(inner) and np.all(inner > tol):
            return arc.copy()
    return None


def _perp_defect(l2: PolyCurve, tol: float = 1e-9) -> float:
    v = l2.vertices
    n = len(v)
    on = np.flatnonzero(np.abs(v[:, 2]) <= tol)
    if len(on) != 2:
        return math.inf
    worst = 0.0
    for i in on:
        for e in (v[(i + 1) % n] - v[i], v[i] - v[(i - 1) % n]):
            cosang = abs(e[2]) / np.linalg.norm(e)
            worst = max(worst, math.acos(min(1.0, cosang)))
    return worst


def validate_construction(l1: PolyCurve, l2: PolyCurve, thickness_tol: float = THICKNESS_TOL,
                          seed: int = 0) -> ConstructionReport:
    """Check every condition the link is meant to satisfy.

    ``conditions_ok`` requires: an upper arc ``alpha`` in ``z >= 0`` whose
    closure is certified knotted, edges at A and B perpendicular to the
    plane, link thickness at least ``1 - thickness_tol`` and linking
    number zero.
    """
    notes = []
    l1_len = curve_length(l1)
    l2_len = curve_length(l2)
    try:
        thick = link_thickness(ThickLink((l1, l2), 1.0)).thickness
    except Exception as exc:  # touching or degenerate components
        notes.append(f"thickness failed: {exc}")
        thick = 0.0
    alpha = extract_alpha(l2)
    knotted = False
    det = None
    min_z = float("nan")
    if alpha is None:
        notes.append("L2 does not meet z = 0 in exactly two vertices")
    else:
        min_z = float(alpha[:, 2].min())
        try:
            cert = certify_knotted(alpha_closure(alpha), seed=seed)
            det = cert.determinant
            knotted = cert.verdict == "knotted"
        except GenericityError as exc:
            notes.append(f"knot certificate failed: {exc}")
    perp = _perp_defect(l2)
    try:
        lk = linking_number(l1, l2, seed=seed)
    except Exception as exc:
        notes.append(f"linking number failed: {exc}")
        lk = None
    if thick < 1.0 - thickness_tol:
        notes.append(f"thickness {thick:.6f} below {1 - thickness_tol}")
    ok = (knotted and perp <= PERP_TOL and thick >= 1.0 - thickness_tol
          and lk == 0 and min_z >= -1e-12)
    return ConstructionReport(l1_len, l2_len, float(thick), knotted, float(perp), bool(ok),
                              lk, det, min_z, tuple(notes))


def construct(spec: GordianSpec) -> tuple[ThickLink, ConstructionReport]:
    """Build and validate; raise :class:`ConstructionError` if anything fails."""
    link = build_link(spec)
    report = validate_construction(*link.components)
    if not report.conditions_ok:
        raise ConstructionError("construction check failed: " + "; ".join(report.notes or
                                                                         ("alpha not certified knotted",)))
    return link, report


# --------------------------------------------------------------------------
# control links
# --------------------------------------------------------------------------

def clasp_link(n1: int = 64, n2: int = 64, outer: float = 3.6, inner: float = 1.5) -> ThickLink:
    """Unlinked pair: a small circle threaded through a large planar one.

    The small circle lies in the ``xz`` plane centred at the origin, so it
    pierces the disk of the large circle twice with opposite signs and can
    be lifted straight out.
    """
    l1 = regular_polygon(n1, outer)
    l2 = regular_polygon(n2, inner, normal=(0.0, 1.0, 0.0))
    return ThickLink((l1, l2), 1.0, {"scenario": "clasp"})


def hopf_link(n: int = 64, radius: float = 2.0) -> ThickLink:
    """Two round circles, each through the centre of the other."""
    l1 = regular_polygon(n, radius)
    l2 = regular_polygon(n, radius, center=(radius, 0.0, 0.0), normal=(0.0, 1.0, 0.0))
    return ThickLink((l1, l2), 1.0, {"scenario": "hopf"})
