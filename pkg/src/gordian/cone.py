"""
Cone disks and their intrinsic metric.

The cone over a closed curve from an apex is the fan of triangles
``(apex, v_i, v_{i+1})``. It is flat away from the apex, and all of its
curvature sits at the apex as an angle defect: the *cone angle* is the sum
of the apex angles of the triangles.

This module also counts the *dotted components* of a cone disk pierced by
a thick core curve. The disk is refined, its vertices are classified as
inside or outside the tube, inside vertices are grouped into connected
components, and each transverse crossing of the core with the disk (a
*dot*) is attached to the component around it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.spatial import cKDTree

from .errors import GeometryError, GenericityError, ValidationError
from .geom import PolyCurve, point_curve_distance

TANGENCY_TOL = 1e-7
INSIDE_SLACK = 1e-9
_GL_NODES, _GL_WEIGHTS = leggauss(16)


@dataclass(frozen=True, eq=False)
class ConeDisk:
    """Fan triangulation of the cone over ``boundary`` from ``apex``.

    ``triangles[i]`` holds vertex indices into :attr:`vertices`, where the
    apex is the last vertex and boundary vertex ``i`` keeps index ``i``.
    """

    apex: np.ndarray
    boundary: PolyCurve
    triangles: np.ndarray
    intrinsic_angles: np.ndarray

    @property
    def vertices(self) -> np.ndarray:
        return np.vstack([self.boundary.vertices, self.apex[None, :]])

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def normals(self) -> np.ndarray:
        """Unnormalised triangle normals, oriented by the boundary direction."""
        v = self.boundary.vertices
        return np.cross(v - self.apex, np.roll(v, -1, axis=0) - self.apex)


def cone_over(boundary: PolyCurve, apex, tol: float = 1e-12) -> ConeDisk:
    """Cone over a closed curve.

    Raises :class:`GeometryError` if the apex lies on the boundary.
    """
    if not boundary.closed:
        raise ValidationError("cone boundary must be a closed curve")
    p = np.asarray(apex, dtype=float).reshape(3)
    if not np.all(np.isfinite(p)):
        raise ValidationError("apex must be finite")
    scale = max(float(np.abs(boundary.vertices).max()), 1.0)
    if point_curve_distance(p[None, :], boundary)[0] <= tol * scale:
        raise GeometryError("apex lies on the boundary curve")
    v = boundary.vertices
    a = v - p
    b = np.roll(v, -1, axis=0) - p
    angles = np.arctan2(np.linalg.norm(np.cross(a, b), axis=1), np.einsum("ij,ij->i", a, b))
    n = len(v)
    tri = np.stack([np.full(n, n), np.arange(n), (np.arange(n) + 1) % n], axis=1)
    angles.setflags(write=False)
    tri.setflags(write=False)
    p.setflags(write=False)
    return ConeDisk(p, boundary, tri, angles)


def cone_angle(d: ConeDisk) -> float:
    """Total angle at the cone point (``2 pi`` for a flat disk)."""
    return float(math.fsum(d.intrinsic_angles))


# --------------------------------------------------------------------------
# intrinsic metric of a cone
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeMetric:
    """Flat cone of total angle ``total_angle`` in polar coordinates ``(r, theta)``."""

    total_angle: float

    def __post_init__(self):
        if not (math.isfinite(self.total_angle) and self.total_angle >= 2 * math.pi - 1e-12):
            raise ValidationError("cone angle must be at least 2 pi")

    def angular_gap(self, t1, t2):
        """Unsigned angular separation measured the short way round."""
        a = self.total_angle
        g = np.mod(np.abs(np.asarray(t1, dtype=float) - np.asarray(t2, dtype=float)), a)
        return np.minimum(g, a - g)

    def signed_step(self, t1, t2):
        """Signed angle from ``t1`` to ``t2`` wrapped into ``(-a/2, a/2]``."""
        a = self.total_angle
        d = np.mod(np.asarray(t2, dtype=float) - np.asarray(t1, dtype=float), a)
        return np.where(d > a / 2, d - a, d)


def cone_distance(m: ConeMetric, p1, p2) -> float:
    """Geodesic distance between two points ``(r, theta)`` on a cone.

    When the angular gap is at most ``pi`` the geodesic is a straight chord
    in the unrolled sector; otherwise it runs through the apex.
    """
    r1, t1 = float(p1[0]), float(p1[1])
    r2, t2 = float(p2[0]), float(p2[1])
    if r1 < 0 or r2 < 0:
        raise ValidationError("radii must be nonnegative")
    gap = float(m.angular_gap(t1, t2))
    if gap <= math.pi:
        return math.sqrt(max(r1 * r1 + r2 * r2 - 2 * r1 * r2 * math.cos(gap), 0.0))
    return r1 + r2


def radial_projection_length(m: ConeMetric, curve, target_r: float) -> tuple[float, float]:
    """Length of a cone curve before and after radial projection to ``r = target_r``.

    Between consecutive vertices the curve is taken to be linear in
    ``(r, theta)``, turning the short way round the apex. ``before`` is its
    intrinsic length (16-point Gauss-Legendre per segment) and ``after`` the
    length of its image on the circle, ``target_r`` times the swept angle.
    Every quadrature node carries the bound ``r >= target_r``, so
    ``after <= before`` holds for the discrete values too.
    """
    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValidationError("curve must be an (n, 2) array of (r, theta) with n >= 2")
    if not target_r > 0:
        raise ValidationError("target radius must be positive")
    r = pts[:, 0]
    if np.any(r < target_r):
        raise ValidationError("every point must satisfy r >= target_r")
    dtheta = m.signed_step(pts[:-1, 1], pts[1:, 1])
    dr = np.diff(r)
    s = 0.5 * (_GL_NODES + 1.0)
    rs = r[:-1, None] + s[None, :] * dr[:, None]
    speed = np.sqrt(dr[:, None] ** 2 + (rs * dtheta[:, None]) ** 2)
    before = float(np.sum(0.5 * _GL_WEIGHTS[None, :] * speed))
    after = float(target_r * np.abs(dtheta).sum())
    return before, after


# --------------------------------------------------------------------------
# dotted components
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Dot:
    point: tuple[float, float, float]
    triangle: int
    core_edge: int
    sign: int


@dataclass(frozen=True)
class DiskComponent:
    triangles: tuple[int, ...]
    n_vertices: int
    dot_signs: tuple[int, ...] = ()

    @property
    def contains_dot(self) -> bool:
        return len(self.dot_signs) > 0


@dataclass(frozen=True)
class DotReport:
    components: tuple[DiskComponent, ...]
    dots: tuple[Dot, ...] = field(default=())

    @property
    def dotted_count(self) -> int:
        return sum(1 for c in self.components if c.contains_dot)

    @property
    def total_signed_dots(self) -> int:
        return int(sum(d.sign for d in self.dots))

    def to_dict(self) -> dict:
        return {
            "dotted_count": self.dotted_count,
            "total_signed_dots": self.total_signed_dots,
            "components": [{"triangles": list(c.triangles), "n_vertices": c.n_vertices,
                            "contains_dot": c.contains_dot, "dot_signs": list(c.dot_signs)}
                           for c in self.components],
            "dots": [{"point": list(d.point), "triangle": d.triangle,
                      "core_edge": d.core_edge, "sign": d.sign} for d in self.dots],
        }


def refinement_level(d: ConeDisk, radius: float) -> int:
    """Subdivisions per triangle side so every sub-triangle is below ``radius / 4``."""
    v = d.boundary.vertices
    spokes = np.linalg.norm(v - d.apex, axis=1)
    rims = d.boundary.edge_lengths()
    longest = float(max(spokes.max(), rims.max()))
    return int(math.floor(longest / (radius / 4.0))) + 1


def refined_mesh(d: ConeDisk, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Conforming ``k``-fold subdivision of every fan triangle.

    Vertices are arranged in rings around the apex: ring ``L`` holds
    ``n * L`` points. Returns ``(points, faces, edges, owner)`` where
    ``owner`` gives an original triangle for each refined vertex.
    """
    v = d.boundary.vertices
    n = len(v)
    apex = d.apex
    offsets = np.zeros(k + 2, dtype=np.int64)
    offsets[1] = 1
    for L in range(1, k + 1):
        offsets[L + 1] = offsets[L] + n * L

    def idx(L, i, b):
        L = np.asarray(L)
        ring = np.where(L == 0, 0, offsets[np.minimum(L, k)] + np.mod(i * L + b, np.maximum(n * L, 1)))
        return ring.astype(np.int64)

    pts = [apex[None, :]]
    owner = [np.zeros(1, dtype=np.int64)]
    nxt = np.roll(v, -1, axis=0)
    for L in range(1, k + 1):
        i = np.repeat(np.arange(n), L)
        b = np.tile(np.arange(L), n)
        w1 = ((L - b) / k)[:, None]
        w2 = (b / k)[:, None]
        pts.append(apex + w1 * (v[i] - apex) + w2 * (nxt[i] - apex))
        owner.append(i)
    points = np.vstack(pts)
    owner = np.concatenate(owner)

    faces, edges = [], []
    for L in range(0, k):
        i = np.repeat(np.arange(n), L + 1)
        b = np.tile(np.arange(L + 1), n)
        a0 = idx(L, i, b) if L else np.zeros(len(i), dtype=np.int64)
        a1 = idx(L + 1, i, b)
        a2 = idx(L + 1, i, b + 1)
        faces.append(np.stack([a0, a1, a2], axis=1))
        edges += [np.stack([a0, a1], 1), np.stack([a0, a2], 1), np.stack([a1, a2], 1)]
        if L:
            i2 = np.repeat(np.arange(n), L)
            b2 = np.tile(np.arange(L), n)
            c0 = idx(L, i2, b2)
            c1 = idx(L, i2, b2 + 1)
            c2 = idx(L + 1, i2, b2 + 1)
            faces.append(np.stack([c0, c2, c1], axis=1))
    faces = np.vstack(faces)
    edges = np.unique(np.sort(np.vstack(edges), axis=1), axis=0)
    return points, faces, edges, owner


def _union_find(n: int, edges: np.ndarray) -> np.ndarray:
    parent = np.arange(n)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(x) for x in range(n)])


def find_dots(d: ConeDisk, core: PolyCurve, tangency_tol: float = TANGENCY_TOL,
              tol: float = 1e-12) -> list[Dot]:
    """Transverse crossings of the core with the original cone triangles.

    Each crossing is counted once: core edges own their start point but not
    their end point, and hits on a spoke shared by two triangles are merged.
    """
    v = d.boundary.vertices
    apex = d.apex
    e1 = v - apex
    e2 = np.roll(v, -1, axis=0) - apex
    normals = np.cross(e1, e2)
    q0, q1 = core.edges()
    seg = q1 - q0
    m = len(q0)
    hits = {}
    for tri in range(len(v)):
        n_t = normals[tri]
        nn = float(np.linalg.norm(n_t))
        if nn == 0:
            continue
        h0 = (q0 - apex) @ n_t / nn
        h1 = (q1 - apex) @ n_t / nn
        cand = np.flatnonzero(~(((h0 > tol) & (h1 > tol)) | ((h0 < -tol) & (h1 < -tol))))
        for j in cand:
            denom = h0[j] - h1[j]
            seg_len = float(np.linalg.norm(seg[j]))
            if abs(denom) <= tangency_tol * seg_len:
                # segment parallel to the triangle plane: only a problem if it lies on it
                if abs(h0[j]) <= tol and _in_triangle(q0[j], apex, e1[tri], e2[tri], n_t, 1e-9):
                    raise GenericityError("core edge lies in the disk plane")
                continue
            t = h0[j] / denom
            if t < -tol or t >= 1.0 - tol:
                continue
            x = q0[j] + t * seg[j]
            bary = _barycentric(x, apex, e1[tri], e2[tri], n_t)
            if bary is None or min(bary) < -1e-9:
                continue
            if bary[0] <= 1e-9 and max(bary[1], bary[2]) > 0:
                raise GeometryError("core meets the boundary of the disk")
            if t <= tol:
                prev = q0[(j - 1) % m]
                s_prev = (prev - apex) @ n_t
                s_next = (q1[j] - apex) @ n_t
                if s_prev * s_next >= 0:
                    raise GenericityError("core touches the disk without crossing it")
                sign = 1 if s_next > 0 else -1
            else:
                sign = 1 if n_t @ seg[j] > 0 else -1
            key = (int(j), round(float(t), 9))
            if key not in hits:
                hits[key] = Dot(tuple(float(c) for c in x), tri, int(j), sign)
    return [hits[k] for k in sorted(hits)]


def _barycentric(x, apex, e1, e2, n):
    """Barycentric weights of ``x`` in triangle (apex, apex + e1, apex + e2)."""
    nn = n @ n
    w = x - apex
    b1 = np.cross(w, e2) @ n / nn
    b2 = np.cross(e1, w) @ n / nn
    return (1.0 - b1 - b2, b1, b2)


def _in_triangle(x, apex, e1, e2, n, tol):
    b = _barycentric(x, apex, e1, e2, n)
    return min(b) >= -tol


def dotted_components(d: ConeDisk, core: PolyCurve, radius: float,
                      tangency_tol: float = TANGENCY_TOL, refine: int | None = None) -> DotReport:
    """Components of the disk inside the radius-``radius`` tube about ``core``.

    Vertices of the refined mesh closer than ``radius`` to the core are
    inside; inside vertices joined by a mesh edge share a component. Each
    dot is attached to the component of the nearest inside vertex.
    """
    if not radius > 0:
        raise ValidationError("radius must be positive")
    if not core.closed:
        raise ValidationError("core must be closed")
    k = refine if refine is not None else refinement_level(d, radius)
    points, _, edges, owner = refined_mesh(d, k)
    dist = point_curve_distance(points, core)
    inside = dist < radius * (1.0 - INSIDE_SLACK)
    ids = np.flatnonzero(inside)
    comps: list[DiskComponent] = []
    dots = find_dots(d, core, tangency_tol)
    if not len(ids):
        if dots:
            raise GeometryError("dot found but no refined vertex lies inside the tube")
        return DotReport((), tuple(dots))
    keep = inside[edges[:, 0]] & inside[edges[:, 1]]
    # an edge only joins two inside vertices if it stays inside; this keeps
    # tube cross-sections that touch at a single point apart
    cand = np.flatnonzero(keep)
    if len(cand):
        mids = 0.5 * (points[edges[cand, 0]] + points[edges[cand, 1]])
        keep[cand] = point_curve_distance(mids, core) < radius * (1.0 - INSIDE_SLACK)
    local = -np.ones(len(points), dtype=np.int64)
    local[ids] = np.arange(len(ids))
    roots = _union_find(len(ids), local[edges[keep]])
    labels, comp_of = np.unique(roots, return_inverse=True)
    signs: list[list[int]] = [[] for _ in labels]
    if dots:
        tree = cKDTree(points[ids])
        dd, nearest = tree.query(np.array([dot.point for dot in dots]))
        for dot, near, gap in zip(dots, nearest, dd):
            if gap > radius:
                raise GeometryError("dot is not surrounded by tube vertices")
            signs[comp_of[near]].append(dot.sign)
    for c in range(len(labels)):
        members = ids[comp_of == c]
        tris = tuple(int(t) for t in np.unique(owner[members]))
        comps.append(DiskComponent(tris, int(len(members)), tuple(signs[c])))
    return DotReport(tuple(comps), tuple(dots))


def cone_obj(d: ConeDisk, k: int = 1) -> str:
    """Wavefront OBJ text for the (optionally refined) cone disk."""
    points, faces, _, _ = refined_mesh(d, max(int(k), 1))
    lines = [f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}" for p in points]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    return "\n".join(lines) + "\n"
