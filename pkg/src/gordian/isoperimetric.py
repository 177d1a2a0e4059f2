"""
Length bounds for plane curves that stay away from a few unit disks.

A curve keeping distance ``margin`` from unit disks around ``centers`` must
stay ``offset = disk_radius + margin`` away from every centre, and the
shortest such curve is the boundary of the ``offset``-parallel body of the
centres' convex hull. Its length is ``hull perimeter + 2 pi offset``.
With ``n`` centres in convex position and pairwise distances at least 2,
each hull side is at least 2 long, so the length is at least
``4 pi + 2 n`` for the default radii.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ValidationError

EQUILATERAL_SIDE = 2.0


@dataclass(frozen=True)
class DiskConfig:
    centers: np.ndarray
    disk_radius: float = 1.0
    margin: float = 1.0

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if c.size == 0:
            raise ValidationError("at least one centre is required")
        if c.ndim != 2 or c.shape[1] != 2 or not np.all(np.isfinite(c)):
            raise ValidationError("centres must be finite 2D points")
        if not (self.disk_radius > 0 and self.margin >= 0):
            raise ValidationError("disk radius must be positive and margin nonnegative")
        for i, j in combinations(range(len(c)), 2):
            if np.linalg.norm(c[i] - c[j]) < 2 * self.disk_radius * (1 - 1e-12):
                raise ValidationError(f"disks {i} and {j} overlap")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def offset(self) -> float:
        return self.disk_radius + self.margin

    @classmethod
    def from_sides(cls, d12: float, d13: float, d23: float, **kw) -> DiskConfig:
        """Three centres with the given pairwise distances."""
        if d23 > d12 + d13 or d13 > d12 + d23 or d12 > d13 + d23:
            raise ValidationError("side lengths violate the triangle inequality")
        x = (d12 ** 2 + d13 ** 2 - d23 ** 2) / (2 * d12)
        y = math.sqrt(max(d13 ** 2 - x ** 2, 0.0))
        return cls(np.array([[0.0, 0.0], [d12, 0.0], [x, y]]), **kw)


@dataclass(frozen=True)
class BoundMargin:
    bound: float
    achieved: float

    @property
    def margin(self) -> float:
        return self.achieved - self.bound


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> np.ndarray:
    """Strict convex hull vertices in counter-clockwise order (monotone chain)."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    if len(pts) <= 2:
        return np.array(pts)
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def hull_perimeter(points) -> float:
    h = convex_hull(points)
    if len(h) < 2:
        return 0.0
    if len(h) == 2:
        return 2.0 * float(np.linalg.norm(h[1] - h[0]))
    return float(np.linalg.norm(np.roll(h, -1, axis=0) - h, axis=1).sum())


def parallel_body_length(centers, offset: float) -> float:
    """Perimeter of the ``offset``-neighbourhood of the centres' convex hull."""
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    if c.size == 0:
        raise ValidationError("at least one centre is required")
    if not offset > 0:
        raise ValidationError("offset must be positive")
    return hull_perimeter(c) + 2.0 * math.pi * offset


def _bound(n: int, cfg: DiskConfig) -> float:
    return 2.0 * math.pi * cfg.offset + n * 2.0 * cfg.disk_radius


def verify_three_disk_bound(cfg: DiskConfig) -> BoundMargin:
    """Shortest enclosing length for three disks against ``4 pi + 6``."""
    if len(cfg.centers) != 3:
        raise ValidationError("exactly three centres are required")
    return BoundMargin(_bound(3, cfg), parallel_body_length(cfg.centers, cfg.offset))


def in_convex_position(centers) -> bool:
    c = np.asarray(centers, dtype=float)
    if len(c) <= 2:
        return True
    return len(convex_hull(c)) == len(c)


def verify_n_disk_bound(cfg: DiskConfig) -> BoundMargin:
    """Shortest enclosing length for ``n >= 2`` disks in convex position."""
    n = len(cfg.centers)
    if n < 2:
        raise ValidationError("at least two centres are required")
    if not in_convex_position(cfg.centers):
        raise ValidationError("centres are not in convex position")
    return BoundMargin(_bound(n, cfg), parallel_body_length(cfg.centers, cfg.offset))


def _sample_sides(rng: np.random.Generator, low: float = 2.0, high: float = 6.0):
    while True:
        d = np.exp(rng.uniform(math.log(low), math.log(high), size=3))
        if d[2] <= d[0] + d[1] and d[1] <= d[0] + d[2] and d[0] <= d[1] + d[2]:
            return tuple(float(x) for x in d)


def sample_and_sweep(trials: int, seed: int = 0, force_equilateral: bool = False):
    """Margins for random three-disk configurations.

    Side lengths are log-uniform in ``[2, 6]`` with rejection of
    non-triangles. Trial ``i`` draws from ``default_rng([seed, i])``, so
    results do not depend on how trials are scheduled. Returns a list of
    ``(sides, BoundMargin)`` pairs.
    """
    if int(trials) != trials or trials <= 0:
        raise ValidationError("trials must be a positive integer")
    out = []
    for i in range(int(trials)):
        if force_equilateral:
            sides = (EQUILATERAL_SIDE,) * 3
        else:
            sides = _sample_sides(np.random.default_rng([seed, i]))
        out.append((sides, verify_three_disk_bound(DiskConfig.from_sides(*sides))))
    return out


def sweep_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "d12", "d13", "d23", "achieved", "bound", "margin"])
    for i, (sides, m) in enumerate(results):
        w.writerow([i, *(repr(s) for s in sides), repr(m.achieved), repr(m.bound), repr(m.margin)])
    return buf.getvalue()


def regular_polygon_centers(n: int, side: float = 2.0) -> np.ndarray:
    """Vertices of a regular ``n``-gon with the given side length."""
    R = side / (2 * math.sin(math.pi / n))
    a = 2 * math.pi * np.arange(n) / n
    return np.stack([R * np.cos(a), R * np.sin(a)], axis=1)
