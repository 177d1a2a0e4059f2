"""
Polygonal thickness of curves and links.

Thickness of a polygon is taken as the minimum of two discrete terms:

* the smallest vertex turning radius ``min(l_in, l_out) / (2 tan(phi / 2))``;
* half the smallest distance between non-adjacent, doubly critical edge
  pairs (pairs whose distance is a discrete local minimum).

For links the distance between distinct components enters halved as well,
so a link is ``r``-thick when tubes of radius ``r`` about the components
are embedded and pairwise disjoint.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateCurveError, GeometryError, ValidationError
from .geom import PolyCurve, ThickLink, segment_distances

CUSP_TOL = 1e-9
LOCALITY_SLACK = 0.05
TOUCH_EPS = 1e-12


@dataclass(frozen=True)
class ThicknessReport:
    min_rad: float
    self_clearance: float
    cross_clearance: float
    thickness: float

    def certifies(self, r: float) -> bool:
        return self.thickness >= r

    def to_dict(self) -> dict:
        return {k: (None if math.isinf(v) else float(v)) for k, v in asdict(self).items()}


# --------------------------------------------------------------------------
# curvature term
# --------------------------------------------------------------------------

def turning_radii(c: PolyCurve, cusp_tol: float = CUSP_TOL) -> np.ndarray:
    """Turning radius at every vertex (interior vertices only for open curves)."""
    v = c.vertices
    if c.closed:
        e_in = v - np.roll(v, 1, axis=0)
        e_out = np.roll(v, -1, axis=0) - v
    else:
        e_in = v[1:-1] - v[:-2]
        e_out = v[2:] - v[1:-1]
    l_in = np.linalg.norm(e_in, axis=1)
    l_out = np.linalg.norm(e_out, axis=1)
    sin_phi = np.linalg.norm(np.cross(e_in, e_out), axis=1)
    cos_phi = np.einsum("ij,ij->i", e_in, e_out)
    phi = np.arctan2(sin_phi, cos_phi)
    if np.any(phi >= math.pi - cusp_tol):
        i = int(np.argmax(phi))
        raise DegenerateCurveError(f"vertex {i} turns by {phi[i]:.12g} rad (cusp)")
    with np.errstate(divide="ignore"):
        return np.where(phi > 0.0, np.minimum(l_in, l_out) / (2.0 * np.tan(phi / 2.0)), np.inf)


def min_radius_of_curvature(c: PolyCurve, cusp_tol: float = CUSP_TOL) -> float:
    r = turning_radii(c, cusp_tol)
    return float(r.min()) if len(r) else math.inf


# --------------------------------------------------------------------------
# spatial grid
# --------------------------------------------------------------------------

_OFFSETS = np.array(list(itertools.product((-1, 0, 1), repeat=3)))


class SpatialGrid:
    """Uniform grid registering each edge in every cell its bounding box meets.

    ``cells`` maps integer cell triples to an array of global edge ids;
    ``entries[gid] = (component index, edge index)``. The grid is immutable
    once built.
    """

    def __init__(self, curves, cell_size: float = 2.0):
        if not cell_size > 0:
            raise ValidationError("cell_size must be positive")
        self.cell_size = float(cell_size)
        starts, ends, comp, edge = [], [], [], []
        for ci, c in enumerate(curves):
            a, b = c.edges()
            starts.append(a)
            ends.append(b)
            comp.append(np.full(len(a), ci))
            edge.append(np.arange(len(a)))
        self.starts = np.concatenate(starts)
        self.ends = np.concatenate(ends)
        self.entries = np.stack([np.concatenate(comp), np.concatenate(edge)], axis=1)
        self.entries.setflags(write=False)

        lo = np.floor(np.minimum(self.starts, self.ends) / self.cell_size).astype(np.int64)
        hi = np.floor(np.maximum(self.starts, self.ends) / self.cell_size).astype(np.int64)
        span = hi - lo + 1
        keys, gids = [], []
        for off in itertools.product(*(range(m) for m in span.max(axis=0))):
            m = np.all(np.asarray(off) < span, axis=1)
            keys.append(lo[m] + np.asarray(off))
            gids.append(np.nonzero(m)[0])
        keys = np.concatenate(keys)
        gids = np.concatenate(gids)

        self._origin = keys.min(axis=0) - 1
        self._dims = keys.max(axis=0) - self._origin + 2
        codes = self._encode(keys)
        order = np.lexsort((gids, codes))
        self._codes = codes[order]
        self._gids = gids[order]
        self._ucodes, self._gstart, self._gsize = np.unique(
            self._codes, return_index=True, return_counts=True)
        self.cells = {tuple(int(x) for x in self._decode(u)): self._gids[s:s + n]
                      for u, s, n in zip(self._ucodes, self._gstart, self._gsize)}

    def _encode(self, keys: np.ndarray) -> np.ndarray:
        k = keys - self._origin
        return (k[..., 0] * self._dims[1] + k[..., 1]) * self._dims[2] + k[..., 2]

    def _decode(self, code):
        z = code % self._dims[2]
        y = (code // self._dims[2]) % self._dims[1]
        x = code // (self._dims[1] * self._dims[2])
        return np.stack([x, y, z], axis=-1) + self._origin

    def candidate_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Global id pairs ``(a, b)``, ``a < b``, registered in neighbouring cells.

        Any pair absent from the result is at least ``cell_size`` apart.
        """
        keys = self._decode(self._ucodes)
        a_out, b_out = [], []
        for off in _OFFSETS:
            nb = keys + off
            # keys are padded by one cell on every side, so nb stays encodable
            nb_codes = self._encode(nb)
            pos = np.clip(np.searchsorted(self._ucodes, nb_codes), 0, len(self._ucodes) - 1)
            ok = self._ucodes[pos] == nb_codes
            g1 = np.nonzero(ok)[0]
            g2 = pos[ok]
            if not len(g1):
                continue
            n1 = self._gsize[g1]
            n2 = self._gsize[g2]
            m = n1 * n2
            block = np.repeat(np.arange(len(g1)), m)
            p = np.arange(m.sum()) - np.repeat(np.cumsum(m) - m, m)
            ia = self._gstart[g1][block] + p // n2[block]
            ib = self._gstart[g2][block] + p % n2[block]
            a = self._gids[ia]
            b = self._gids[ib]
            keep = a < b
            a_out.append(a[keep])
            b_out.append(b[keep])
        if not a_out:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        n = np.int64(len(self.entries))
        code = np.unique(np.concatenate(a_out).astype(np.int64) * n + np.concatenate(b_out))
        return code // n, code % n


# --------------------------------------------------------------------------
# clearance terms
# --------------------------------------------------------------------------

def _brute_min(a0, a1, b0, b1, chunk: int = 1 << 20) -> float:
    best = math.inf
    rows = max(1, chunk // max(len(b0), 1))
    for i in range(0, len(a0), rows):
        d = segment_distances(a0[i:i + rows, None], a1[i:i + rows, None], b0[None], b1[None])
        best = min(best, float(d.min()))
    return best


def cross_clearance(c1: PolyCurve, c2: PolyCurve, grid: SpatialGrid | None = None,
                    components: tuple[int, int] = (0, 1)) -> float:
    """Exact minimum distance between two curves, pruned by a spatial grid.

    ``grid`` must have been built over a curve list in which ``c1`` and
    ``c2`` sit at the indices given by ``components``. The result equals
    the brute-force all-pairs minimum bit for bit: the same distance kernel
    evaluates every pair, and the grid only discards pairs that are
    provably farther than one cell.
    """
    if grid is None:
        grid = SpatialGrid([c1, c2])
        components = (0, 1)
    a0, a1 = c1.edges()
    b0, b1 = c2.edges()
    ga, gb = grid.candidate_pairs()
    ca, cb = grid.entries[ga, 0], grid.entries[gb, 0]
    i1, i2 = components
    fwd = (ca == i1) & (cb == i2)
    rev = (ca == i2) & (cb == i1)
    ei = np.concatenate([grid.entries[ga[fwd], 1], grid.entries[gb[rev], 1]])
    ej = np.concatenate([grid.entries[gb[fwd], 1], grid.entries[ga[rev], 1]])
    best = math.inf
    if len(ei):
        best = float(segment_distances(a0[ei], a1[ei], b0[ej], b1[ej]).min())
    if best <= grid.cell_size:
        return best
    return _brute_min(a0, a1, b0, b1)


def _midpoint_arclength(c: PolyCurve) -> tuple[np.ndarray, float]:
    lengths = c.edge_lengths()
    cum = np.cumsum(lengths) - 0.5 * lengths
    return cum, float(lengths.sum())


def self_pairs_within(c: PolyCurve, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """Non-adjacent edge pairs ``i < j`` whose midpoints are close enough that
    the edges might lie within ``cutoff`` of each other."""
    a, b = c.edges()
    mids = 0.5 * (a + b)
    lmax = float(c.edge_lengths().max())
    pairs = cKDTree(mids).query_pairs(cutoff + lmax, output_type="ndarray")
    if not len(pairs):
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    pairs = np.sort(pairs, axis=1)
    i, j = pairs[:, 0], pairs[:, 1]
    n = c.n_edges
    gap = j - i
    if c.closed:
        gap = np.minimum(gap, n - gap)
    keep = gap > 1
    return i[keep], j[keep]


def critical_mask(c: PolyCurve, i: np.ndarray, j: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Which pairs are doubly critical: no neighbouring pair is strictly closer."""
    a0, a1 = c.edges()
    n = c.n_edges
    ok = np.ones(len(i), dtype=bool)
    for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ni, nj = i + di, j + dj
        if c.closed:
            ni, nj = ni % n, nj % n
            valid = np.ones(len(i), dtype=bool)
        else:
            valid = (ni >= 0) & (ni < n) & (nj >= 0) & (nj < n)
            ni, nj = np.clip(ni, 0, n - 1), np.clip(nj, 0, n - 1)
        dn = segment_distances(a0[ni], a1[ni], a0[nj], a1[nj])
        ok &= ~valid | (d <= dn)
    return ok


def _local_mask(c: PolyCurve, i, j, d, slack: float) -> np.ndarray:
    """Pairs joined by an arc no longer than a half-turn of diameter ``d``.

    Such an arc must bend with radius at most about ``d / 2`` somewhere, so
    the curvature term already accounts for the pair.
    """
    cum, total = _midpoint_arclength(c)
    s = np.abs(cum[j] - cum[i])
    if c.closed:
        s = np.minimum(s, total - s)
    return s <= 0.5 * math.pi * d * (1.0 + slack)


def _min_critical(c: PolyCurve, cutoff: float, slack: float) -> float:
    i, j = self_pairs_within(c, cutoff)
    if not len(i):
        return math.inf
    a0, a1 = c.edges()
    # cheap lower bound on the edge distance from midpoints and half lengths;
    # it discards far pairs and pairs that are local whatever their distance
    lengths = c.edge_lengths()
    mids = 0.5 * (a0 + a1)
    lower = np.linalg.norm(mids[i] - mids[j], axis=1) - 0.5 * (lengths[i] + lengths[j])
    lower = np.maximum(lower, 0.0)
    maybe = (lower <= cutoff) & ~_local_mask(c, i, j, lower, slack)
    i, j = i[maybe], j[maybe]
    if not len(i):
        return math.inf
    d = segment_distances(a0[i], a1[i], a0[j], a1[j])
    scale = max(float(np.abs(c.vertices).max()), 1.0)
    if np.any(d <= TOUCH_EPS * scale):
        k = int(np.argmin(d))
        raise GeometryError(f"curve self-intersects (edges {i[k]} and {j[k]})")
    near = d <= cutoff
    i, j, d = i[near], j[near], d[near]
    if not len(i):
        return math.inf
    keep = critical_mask(c, i, j, d) & ~_local_mask(c, i, j, d, slack)
    return float(d[keep].min()) if np.any(keep) else math.inf


def strand_clearance(c: PolyCurve, max_distance: float | None = None,
                     locality_slack: float = LOCALITY_SLACK) -> float:
    """Half the doubly critical self-distance of a closed curve.

    Returns ``inf`` when no qualifying pair exists. With ``max_distance``
    only pairs at most that far apart are examined, so ``inf`` then means
    "no critical pair closer than ``max_distance``".
    """
    if max_distance is not None:
        return 0.5 * _min_critical(c, max_distance, locality_slack)
    lengths = c.edge_lengths()
    extent = float(np.ptp(c.vertices, axis=0).max())
    cutoff = max(8.0 * float(lengths.mean()), 1e-9)
    while True:
        best = _min_critical(c, cutoff, locality_slack)
        if best <= cutoff:
            return 0.5 * best
        if cutoff > 2.0 * extent + float(lengths.max()):
            return math.inf
        cutoff *= 2.0


def link_thickness(link: ThickLink, locality_slack: float = LOCALITY_SLACK,
                   cusp_tol: float = CUSP_TOL) -> ThicknessReport:
    """Polygonal thickness report of a link.

    ``self_clearance`` is ``inf`` when no doubly critical self pair is closer
    than the minimum of the curvature and cross terms, since such a pair
    cannot lower the thickness.
    """
    comps = link.components
    min_rad = min(min_radius_of_curvature(c, cusp_tol) for c in comps)
    cross = math.inf
    if len(comps) > 1:
        grid = SpatialGrid(comps, cell_size=2.0 * link.radius)
        for i1, i2 in itertools.combinations(range(len(comps)), 2):
            d = cross_clearance(comps[i1], comps[i2], grid, (i1, i2))
            if d <= TOUCH_EPS:
                raise GeometryError(f"components {i1} and {i2} intersect")
            cross = min(cross, d)
    # self pairs only matter below the bound the other two terms already set
    cap = min(min_rad, 0.5 * cross)
    if math.isfinite(cap):
        self_cl = min(strand_clearance(c, 2.0 * cap * (1 + 1e-9), locality_slack) for c in comps)
    else:
        self_cl = min(strand_clearance(c, locality_slack=locality_slack) for c in comps)
    return ThicknessReport(min_rad, self_cl, cross, min(min_rad, self_cl, 0.5 * cross))


def is_thick(link: ThickLink, r: float, locality_slack: float = LOCALITY_SLACK) -> bool:
    """Certify ``r``-thickness looking only at pairs closer than ``2 r``."""
    comps = link.components
    if min(min_radius_of_curvature(c) for c in comps) < r:
        return False
    if min(strand_clearance(c, 2.0 * r, locality_slack) for c in comps) < r:
        return False
    if len(comps) > 1:
        grid = SpatialGrid(comps, cell_size=2.0 * r)
        for i1, i2 in itertools.combinations(range(len(comps)), 2):
            if cross_clearance(comps[i1], comps[i2], grid, (i1, i2)) < 2.0 * r:
                return False
    return True
