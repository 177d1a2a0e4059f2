"""
Triangle meshes for external viewers.

Tubes are swept along each curve with a parallel-transport frame. For a
closed curve the frame's holonomy is spread evenly along the curve so the
last ring lines up with the first, giving a closed watertight surface. Open
curves get a fan cap at either end.
"""
from __future__ import annotations

import math

import numpy as np

from .cone import ConeDisk, cone_obj, cone_over
from .errors import DegenerateCurveError, ValidationError
from .geom import PolyCurve, ThickLink, centroid


def _vertex_tangents(c: PolyCurve) -> np.ndarray:
    v = c.vertices
    e = np.diff(v, axis=0)
    if c.closed:
        e = np.vstack([e, v[:1] - v[-1:]])
    lengths = np.linalg.norm(e, axis=1)
    if np.any(lengths <= 0):
        raise DegenerateCurveError("curve has a zero-length edge")
    e = e / lengths[:, None]
    if c.closed:
        t = e + np.roll(e, 1, axis=0)
    else:
        t = np.vstack([e[:1], e[:-1] + e[1:], e[-1:]])
    norms = np.linalg.norm(t, axis=1)
    # a cusp leaves no tangent; fall back to the incoming edge direction
    bad = norms < 1e-12
    if np.any(bad):
        inc = np.roll(e, 1, axis=0) if c.closed else np.vstack([e[:1], e[:-1]])
        t[bad] = inc[bad]
        norms[bad] = 1.0
    return t / norms[:, None]


def _rotate(v, axis, angle):
    """Rodrigues rotation of ``v`` about the unit ``axis``."""
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * (axis @ v) * (1 - c)


def transport_frames(c: PolyCurve) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tangents and two normal fields along the curve's vertices."""
    t = _vertex_tangents(c)
    n = len(t)
    seed = np.eye(3)[int(np.argmin(np.abs(t[0])))]
    u = seed - (seed @ t[0]) * t[0]
    u /= np.linalg.norm(u)
    normals = np.empty_like(t)
    normals[0] = u
    for i in range(1, n):
        axis = np.cross(t[i - 1], t[i])
        s = np.linalg.norm(axis)
        if s > 1e-14:
            ang = math.atan2(s, float(t[i - 1] @ t[i]))
            u = _rotate(u, axis / s, ang)
        u = u - (u @ t[i]) * t[i]
        u /= np.linalg.norm(u)
        normals[i] = u
    if c.closed:
        # transport once more around the closing edge and undo the mismatch
        axis = np.cross(t[-1], t[0])
        s = np.linalg.norm(axis)
        back = normals[-1]
        if s > 1e-14:
            back = _rotate(back, axis / s, math.atan2(s, float(t[-1] @ t[0])))
        back = back - (back @ t[0]) * t[0]
        twist = math.atan2(float(np.cross(back, normals[0]) @ t[0]), float(back @ normals[0]))
        for i in range(n):
            normals[i] = _rotate(normals[i], t[i], twist * i / n)
    binormals = np.cross(t, normals)
    return t, normals, binormals


def tube_mesh(c: PolyCurve, radius: float, segments_per_ring: int = 12):
    """Vertices and triangles of a tube of ``radius`` around ``c``.

    The first ``len(c) * segments_per_ring`` vertices are the rings, in
    curve order. Open curves add two cap centres at the end.
    """
    if segments_per_ring < 3:
        raise ValidationError("segments_per_ring must be at least 3")
    if not radius > 0:
        raise ValidationError("tube radius must be positive")
    _, nrm, bin_ = transport_frames(c)
    m = segments_per_ring
    n = len(c)
    ang = 2 * math.pi * np.arange(m) / m
    ring = np.cos(ang)[None, :, None] * nrm[:, None, :] + np.sin(ang)[None, :, None] * bin_[:, None, :]
    verts = (c.vertices[:, None, :] + radius * ring).reshape(-1, 3)

    rows = n if c.closed else n - 1
    i = np.arange(rows)[:, None]
    j = np.arange(m)[None, :]
    a = i * m + j
    b = i * m + (j + 1) % m
    cc = ((i + 1) % n) * m + (j + 1) % m
    d = ((i + 1) % n) * m + j
    faces = np.concatenate([np.stack([a, b, cc], -1).reshape(-1, 3),
                            np.stack([a, cc, d], -1).reshape(-1, 3)])
    if not c.closed:
        start, end = len(verts), len(verts) + 1
        verts = np.vstack([verts, c.vertices[0], c.vertices[-1]])
        k = np.arange(m)
        cap0 = np.stack([np.full(m, start), (k + 1) % m, k], axis=1)
        last = (n - 1) * m
        cap1 = np.stack([np.full(m, end), last + k, last + (k + 1) % m], axis=1)
        faces = np.vstack([faces, cap0, cap1])
    return verts, faces


def _obj_text(groups) -> str:
    lines = []
    base = 0
    for name, verts, faces in groups:
        lines.append(f"o {name}")
        lines += [f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}" for p in verts]
        lines += [f"f {a + base + 1} {b + base + 1} {c + base + 1}" for a, b, c in faces]
        base += len(verts)
    return "\n".join(lines) + "\n"


def tube_obj(link: ThickLink, segments_per_ring: int = 12) -> str:
    """OBJ text with one tube object per component at the link radius."""
    groups = []
    for k, c in enumerate(link.components):
        v, f = tube_mesh(c, link.radius, segments_per_ring)
        groups.append((f"L{k + 1}", v, f))
    return _obj_text(groups)


def curve_tube_obj(curve: PolyCurve, radius: float = 1.0, segments_per_ring: int = 12) -> str:
    """OBJ text for a tube around a single, possibly open, curve."""
    v, f = tube_mesh(curve, radius, segments_per_ring)
    return _obj_text([("curve", v, f)])


def cone_disk_obj(curve: PolyCurve, apex=None, refine: int = 1) -> str:
    """OBJ text for the cone over ``curve`` (apex defaults to the centroid)."""
    disk: ConeDisk = cone_over(curve, centroid(curve) if apex is None else apex)
    return cone_obj(disk, refine)
