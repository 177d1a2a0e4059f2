"""
Core 3D geometry: polygonal curves, segment distances, centroids,
reflection in the xy-plane and the linking number of two closed curves.

Curves are stored as ``(n, 3)`` float arrays. A closed curve does not
repeat its first vertex; the closing edge from the last vertex back to
the first is implicit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GeometryError, GenericityError, ValidationError

Point3 = np.ndarray


def as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"non-finite point {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class PolyCurve:
    """A closed or open polygonal space curve.

    Parameters
    ----------
    vertices : array_like, shape (n, 3)
        Vertex coordinates in order along the curve.
    closed : bool
        Whether an implicit edge joins the last vertex to the first.
    """

    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError(f"vertices must have shape (n, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("vertex coordinates must be finite")
        need = 3 if self.closed else 2
        if len(v) < need:
            raise ValidationError(
                f"{'closed' if self.closed else 'open'} curve needs at least "
                f"{need} vertices, got {len(v)}")
        lengths = np.linalg.norm(_edge_vectors(v, self.closed), axis=1)
        if np.any(lengths == 0.0):
            i = int(np.argmin(lengths))
            raise ValidationError(f"edge {i} has zero length (repeated vertex)")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.vertices) if self.closed else len(self.vertices) - 1

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of every edge, each of shape (n_edges, 3)."""
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(_edge_vectors(self.vertices, self.closed), axis=1)

    def reversed(self) -> PolyCurve:
        return PolyCurve(self.vertices[::-1].copy(), self.closed)

    def transformed(self, rotation=None, translation=None, scale: float = 1.0) -> PolyCurve:
        v = self.vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=float)
        return PolyCurve(v, self.closed)

    def subdivided(self, k: int = 2) -> PolyCurve:
        """Split every edge into ``k`` equal pieces."""
        a, b = self.edges()
        ts = np.arange(k) / k
        pts = a[:, None, :] + ts[None, :, None] * (b - a)[:, None, :]
        pts = pts.reshape(-1, 3)
        if not self.closed:
            pts = np.vstack([pts, self.vertices[-1]])
        return PolyCurve(pts, self.closed)

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist(), "closed": bool(self.closed)}

    @classmethod
    def from_dict(cls, data: dict) -> PolyCurve:
        try:
            return cls(np.asarray(data["vertices"], dtype=float), bool(data.get("closed", True)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad curve record: {exc}") from exc


@dataclass(frozen=True, eq=False)
class ThickLink:
    """Closed components carrying a nominal tube radius."""

    components: tuple[PolyCurve, ...]
    radius: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValidationError("a link needs at least one component")
        for c in comps:
            if not isinstance(c, PolyCurve) or not c.closed:
                raise ValidationError("link components must be closed PolyCurves")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValidationError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "components", comps)

    def __len__(self) -> int:
        return len(self.components)

    def to_dict(self) -> dict:
        return {"radius": float(self.radius),
                "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, data: dict) -> ThickLink:
        try:
            comps = tuple(PolyCurve.from_dict(c) for c in data["components"])
            return cls(comps, float(data.get("radius", 1.0)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad link record: {exc}") from exc


def _edge_vectors(v: np.ndarray, closed: bool) -> np.ndarray:
    if closed:
        return np.roll(v, -1, axis=0) - v
    return v[1:] - v[:-1]


def curve_length(c: PolyCurve) -> float:
    return float(c.edge_lengths().sum())


def centroid(c: PolyCurve) -> np.ndarray:
    """Centre of mass of the curve under the uniform arclength measure."""
    a, b = c.edges()
    w = np.linalg.norm(b - a, axis=1)
    total = w.sum()
    if total <= 0:
        raise ValidationError("curve has zero total length")
    return ((a + b) * 0.5 * w[:, None]).sum(axis=0) / total


def reflect_xy(c: PolyCurve) -> PolyCurve:
    v = np.array(c.vertices)
    v[:, 2] = -v[:, 2]
    return PolyCurve(v, c.closed)


def mirror_defect(c: PolyCurve) -> float:
    """Max deviation of a closed curve from symmetry under z -> -z.

    The symmetry is taken to map vertex ``i`` to vertex ``-i mod n``, which
    is how mirror-built components (arc plus reflected arc) are indexed.
    """
    v = c.vertices
    partner = v[(-np.arange(len(v))) % len(v)].copy()
    partner[:, 2] = -partner[:, 2]
    return float(np.abs(v - partner).max())


# --------------------------------------------------------------------------
# segment distance
# --------------------------------------------------------------------------

def _dot3(u, v):
    # written out per component so the rounding does not depend on array
    # shape or memory layout, which einsum does not promise
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def segment_closest(p0, p1, q0, q1):
    """Vectorised closest points between segments ``p0p1`` and ``q0q1``.

    All arguments broadcast to shape (..., 3). Returns ``(dist, s, t)``
    where ``p0 + s (p1 - p0)`` and ``q0 + t (q1 - q0)`` are closest.
    Segments are assumed to have positive length.
    """
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = _dot3(d1, d1)
    e = _dot3(d2, d2)
    f = _dot3(d2, r)
    c = _dot3(d1, r)
    b = _dot3(d1, d2)
    denom = a * e - b * b
    parallel = denom <= 1e-14 * a * e
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(parallel, 0.0, (b * f - c * e) / np.where(parallel, 1.0, denom))
    s = np.clip(s, 0.0, 1.0)
    t = (b * s + f) / e
    lo = t < 0.0
    hi = t > 1.0
    s = np.where(lo, np.clip(-c / a, 0.0, 1.0), s)
    s = np.where(hi, np.clip((b - c) / a, 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)
    diff = (p0 + s[..., None] * d1) - (q0 + t[..., None] * d2)
    dist = np.sqrt(_dot3(diff, diff))
    return dist, s, t


def segment_distances(p0, p1, q0, q1) -> np.ndarray:
    return segment_closest(p0, p1, q0, q1)[0]


def segment_distance(s1, s2) -> float:
    """Exact minimum distance between two closed segments.

    ``s1`` and ``s2`` are pairs of endpoints.
    """
    p0, p1 = as_point(s1[0]), as_point(s1[1])
    q0, q1 = as_point(s2[0]), as_point(s2[1])
    if np.array_equal(p0, p1) or np.array_equal(q0, q1):
        raise ValidationError("segments must have positive length")
    return float(segment_distances(p0, p1, q0, q1))


def point_segment_distances(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point (m, 3) to each segment (k, 3): shape (m, k)."""
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    w = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("mkj,kj->mk", w, d) / dd, 0.0, 1.0)
    diff = w - t[..., None] * d[None, :, :]
    return np.sqrt(np.einsum("mkj,mkj->mk", diff, diff))


def point_curve_distance(pts: np.ndarray, c: PolyCurve, chunk: int = 2048) -> np.ndarray:
    """Distance from every point to the nearest edge of ``c``."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    a, b = c.edges()
    out = np.empty(len(pts))
    for i in range(0, len(pts), chunk):
        out[i:i + chunk] = point_segment_distances(pts[i:i + chunk], a, b).min(axis=1)
    return out


def min_curve_distance(c1: PolyCurve, c2: PolyCurve, chunk: int = 1 << 20) -> float:
    """Brute-force minimum over all edge pairs of two curves."""
    a0, a1 = c1.edges()
    b0, b1 = c2.edges()
    best = np.inf
    rows = max(1, chunk // len(b0))
    for i in range(0, len(a0), rows):
        d = segment_distances(a0[i:i + rows, None], a1[i:i + rows, None], b0[None], b1[None])
        best = min(best, float(d.min()))
    return best


# --------------------------------------------------------------------------
# projections and the linking number
# --------------------------------------------------------------------------

def projection_frame(direction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed orthonormal frame ``(e1, e2, d)`` with ``e1 x e2 = d``."""
    d = np.asarray(direction, dtype=float)
    n = np.linalg.norm(d)
    if not np.isfinite(n) or n == 0:
        raise ValidationError("projection direction must be a nonzero vector")
    d = d / n
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, d)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2, d


def random_direction(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def projected_crossings(a0, a1, b0, b1, tol: float = 1e-9, skip=None, chunk: int = 1 << 21):
    """Transverse crossings between two families of projected 2D segments.

    Returns ``(i, j, s, t)`` arrays for segment ``i`` of family A crossing
    segment ``j`` of family B at parameters ``s`` and ``t``. ``skip`` is an
    optional callable ``skip(i, j) -> bool mask`` removing pairs (adjacent
    edges of one curve). Raises GenericityError when a pair comes within
    ``tol`` (relative) of touching at an endpoint or running parallel.
    """
    ua = a1 - a0
    ub = b1 - b0
    scale = max(np.abs(np.concatenate([a0, a1, b0, b1])).max(), 1.0)
    atol = tol * scale
    lo_a, hi_a = np.minimum(a0, a1) - atol, np.maximum(a0, a1) + atol
    lo_b, hi_b = np.minimum(b0, b1) - atol, np.maximum(b0, b1) + atol
    rows = max(1, chunk // max(len(b0), 1))
    out = ([], [], [], [])
    for start in range(0, len(a0), rows):
        sl = slice(start, start + rows)
        hit = ((lo_a[sl, None, 0] <= hi_b[None, :, 0]) & (lo_b[None, :, 0] <= hi_a[sl, None, 0])
               & (lo_a[sl, None, 1] <= hi_b[None, :, 1]) & (lo_b[None, :, 1] <= hi_a[sl, None, 1]))
        ii, jj = np.nonzero(hit)
        ii = ii + start
        if skip is not None and len(ii):
            keep = ~skip(ii, jj)
            ii, jj = ii[keep], jj[keep]
        if not len(ii):
            continue
        u = ua[ii]
        v = ub[jj]
        w = b0[jj] - a0[ii]
        den = _cross2(u, v)
        lu = np.linalg.norm(u, axis=1)
        lv = np.linalg.norm(v, axis=1)
        near_parallel = np.abs(den) <= tol * lu * lv
        if np.any(near_parallel):
            # parallel pairs matter only if they are (nearly) collinear
            off = np.abs(_cross2(w, u)) / lu
            if np.any(near_parallel & (off <= atol)):
                raise GenericityError("projected segments overlap collinearly")
        den = np.where(near_parallel, 1.0, den)
        s = _cross2(w, v) / den
        t = _cross2(w, u) / den
        inside = (~near_parallel) & (s > -tol) & (s < 1 + tol) & (t > -tol) & (t < 1 + tol)
        if not np.any(inside):
            continue
        s, t = s[inside], t[inside]
        ii, jj = ii[inside], jj[inside]
        ta = tol * scale / lu[inside]
        tb = tol * scale / lv[inside]
        if np.any((s < ta) | (s > 1 - ta) | (t < tb) | (t > 1 - tb)):
            raise GenericityError("projection passes through a vertex")
        for lst, arr in zip(out, (ii, jj, s, t)):
            lst.append(arr)
    if not out[0]:
        empty_i = np.zeros(0, dtype=int)
        return empty_i, empty_i, np.zeros(0), np.zeros(0)
    return tuple(np.concatenate(lst) for lst in out)


def _check_disjoint(c1: PolyCurve, c2: PolyCurve, eps: float = 1e-12) -> None:
    if min_curve_distance(c1, c2) <= eps:
        raise GeometryError("curves intersect")


def crossing_sum(c1: PolyCurve, c2: PolyCurve, direction, tol: float = 1e-9) -> int:
    """Sum of crossing signs of ``c1`` against ``c2`` seen along ``direction``."""
    e1, e2, d = projection_frame(direction)
    basis = np.stack([e1, e2], axis=1)
    a0, a1 = c1.edges()
    b0, b1 = c2.edges()
    i, j, s, t = projected_crossings(a0 @ basis, a1 @ basis, b0 @ basis, b1 @ basis, tol)
    if not len(i):
        return 0
    ta = (a1 - a0)[i]
    tb = (b1 - b0)[j]
    ha = (a0[i] + s[:, None] * ta) @ d
    hb = (b0[j] + t[:, None] * tb) @ d
    if np.any(np.abs(ha - hb) <= tol):
        raise GeometryError("curves meet at a projected crossing")
    over_is_a = ha > hb
    over = np.where(over_is_a[:, None], ta, tb)
    under = np.where(over_is_a[:, None], tb, ta)
    signs = np.sign(np.cross(over, under) @ d).astype(int)
    return int(signs.sum())


def linking_number(c1: PolyCurve, c2: PolyCurve, seed: int = 0, max_tries: int = 16,
                   tol: float = 1e-9) -> int:
    """Linking number from signed crossings of a generic projection.

    The count is repeated along a second, independently drawn direction and
    the two results must agree.
    """
    if not (c1.closed and c2.closed):
        raise ValidationError("linking number needs two closed curves")
    _check_disjoint(c1, c2)
    rng = np.random.default_rng(seed)
    found: list[int] = []
    for _ in range(max_tries):
        try:
            total = crossing_sum(c1, c2, random_direction(rng), tol)
        except GenericityError:
            continue
        if total % 2:
            continue
        found.append(total // 2)
        if len(found) == 2:
            if found[0] == found[1]:
                return found[0]
            found = found[1:]
    raise GenericityError(f"no generic projection after {max_tries} directions")


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0, 0.0),
                    normal: Sequence[float] | None = None, phase: float = 0.0) -> PolyCurve:
    """Regular ``n``-gon inscribed in a circle, counter-clockwise about ``normal``."""
    th = phase + 2 * np.pi * np.arange(n) / n
    pts = np.stack([np.cos(th), np.sin(th), np.zeros(n)], axis=1) * radius
    if normal is not None:
        nz = np.asarray(normal, dtype=float)
        nz = nz / np.linalg.norm(nz)
        if not np.allclose(nz, [0, 0, 1]):
            e1, e2, d = projection_frame(nz)
            pts = pts @ np.stack([e1, e2, d])
    return PolyCurve(pts + np.asarray(center, dtype=float), True)
