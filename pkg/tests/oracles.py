"""Independent reference computations used to cross-check the package.

Nothing here is imported by the package itself.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np


def exact_det(m) -> int:
    """Determinant by Gaussian elimination over the rationals."""
    a = [[Fraction(int(x)) for x in row] for row in m]
    n = len(a)
    det = Fraction(1)
    for k in range(n):
        piv = next((r for r in range(k, n) if a[r][k] != 0), None)
        if piv is None:
            return 0
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for r in range(k + 1, n):
            f = a[r][k] / a[k][k]
            for c in range(k, n):
                a[r][c] -= f * a[k][c]
    return int(det)


def colouring_determinant(diagram) -> int:
    """|Alexander polynomial at t = -1| from the Fox colouring matrix.

    The curve is cut at every under-passage into arcs; each crossing gives
    the relation ``2 * over - in - out``.
    """
    code = diagram.gauss_code
    n = diagram.n_crossings
    if n == 0:
        return 1
    # arc index for every event; arcs start right after an under event
    first_u = next(i for i, (_, ou) in enumerate(code) if ou == "U")
    order = code[first_u + 1:] + code[:first_u + 1]
    arc_of_event = []
    arc = 0
    for k, ou in order:
        arc_of_event.append((k, ou, arc))
        if ou == "U":
            arc = (arc + 1) % n
    m = np.zeros((n, n), dtype=np.int64)
    for k, ou, a in arc_of_event:
        if ou == "O":
            m[k, a] += 2
        else:
            m[k, a] -= 1
            m[k, (a + 1) % n] -= 1
    return abs(exact_det(m[1:, 1:]))


def gauss_linking(c1, c2) -> float:
    """Gauss linking integral of two closed polygons by exact solid angles."""
    v1 = np.asarray(c1.vertices)
    v2 = np.asarray(c2.vertices)
    a0, a1 = v1, np.roll(v1, -1, axis=0)
    b0, b1 = v2, np.roll(v2, -1, axis=0)
    total = 0.0
    for i in range(len(a0)):
        # quadrilateral of difference vectors r_ij = b - a, exact formula per pair
        p1 = b0 - a0[i]
        p2 = b1 - a0[i]
        p3 = b1 - a1[i]
        p4 = b0 - a1[i]
        total += _quad_solid_angle(p1, p4, p3, p2).sum()
    return total / (4 * np.pi)


def _tri_solid_angle(a, b, c):
    la = np.linalg.norm(a, axis=-1)
    lb = np.linalg.norm(b, axis=-1)
    lc = np.linalg.norm(c, axis=-1)
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = (la * lb * lc + np.einsum("ij,ij->i", a, b) * lc
           + np.einsum("ij,ij->i", a, c) * lb + np.einsum("ij,ij->i", b, c) * la)
    return 2 * np.arctan2(num, den)


def _quad_solid_angle(p1, p2, p3, p4):
    return _tri_solid_angle(p1, p2, p3) + _tri_solid_angle(p1, p3, p4)


def brute_strand_clearance(c, slack: float = 0.05) -> float:
    """Half the doubly critical self-distance from the full pair matrix."""
    v = np.asarray(c.vertices)
    n = len(v)
    a0, a1 = v, np.roll(v, -1, axis=0)
    d = _all_pairs(a0, a1, a0, a1)
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    gap = np.minimum(gap, n - gap)
    lengths = np.linalg.norm(a1 - a0, axis=1)
    mid = np.cumsum(lengths) - 0.5 * lengths
    arc = np.abs(mid[:, None] - mid[None, :])
    arc = np.minimum(arc, lengths.sum() - arc)
    crit = np.ones_like(d, dtype=bool)
    for shift, axis in ((1, 0), (-1, 0), (1, 1), (-1, 1)):
        crit &= d <= np.roll(d, shift, axis=axis)
    ok = (gap > 1) & crit & (arc > 0.5 * np.pi * d * (1 + slack))
    return 0.5 * float(d[ok].min()) if ok.any() else np.inf


def _all_pairs(a0, a1, b0, b1):
    """Distance matrix over every edge pair, with no pruning at all."""
    # the pair kernel itself is cross-checked against sampled_segment_distance
    from gordian.geom import segment_distances

    return segment_distances(a0[:, None], a1[:, None], b0[None], b1[None])


def sampled_segment_distance(p0, p1, q0, q1, k: int = 2001) -> float:
    """Minimum over a dense parameter grid, refined by a local quadratic fit."""
    s = np.linspace(0, 1, k)
    p = p0 + s[:, None] * (np.asarray(p1) - p0)
    q = q0 + s[:, None] * (np.asarray(q1) - q0)
    d = np.linalg.norm(p[:, None] - q[None], axis=2)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    from scipy.optimize import minimize

    def f(x):
        x = np.clip(x, 0, 1)
        return np.linalg.norm(p0 + x[0] * (np.asarray(p1) - p0) - q0 - x[1] * (np.asarray(q1) - q0))

    res = minimize(f, [s[i], s[j]], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
    return float(min(res.fun, d[i, j]))


def arclength_centroid(c, samples: int = 200_000) -> np.ndarray:
    """Mean of points spaced uniformly in arclength along the curve."""
    v = np.asarray(c.vertices)
    b = np.roll(v, -1, axis=0)
    lengths = np.linalg.norm(b - v, axis=1)
    cum = np.concatenate([[0], np.cumsum(lengths)])
    s = (np.arange(samples) + 0.5) / samples * cum[-1]
    k = np.searchsorted(cum, s, side="right") - 1
    t = (s - cum[k]) / lengths[k]
    return (v[k] + t[:, None] * (b[k] - v[k])).mean(axis=0)


def unrolled_cone_distance(total_angle: float, p1, p2, radii: int = 120) -> float:
    """Geodesic distance on a flat cone by search over an unrolled sector chain.

    The cone is cut into sectors of angle at most ``pi / 2``. Each sector is
    convex once unrolled, so any two of its points are joined by a straight
    chord. Dijkstra over points on the cut rays (plus the apex) finds the
    best chain of chords; the ray crossings are then polished continuously.
    """
    from scipy.optimize import minimize
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    a = float(total_angle)
    K = int(np.ceil(a / (np.pi / 2)))
    rays = np.arange(K) * a / K
    rmax = 2.0 * max(p1[0], p2[0]) + 1e-9
    # uniform spacing plus a geometric run that resolves the apex region
    rs = np.unique(np.concatenate([np.linspace(rmax / radii, rmax, radii),
                                   np.geomspace(1e-3 * rmax, rmax, radii // 2)]))
    radii = len(rs)

    def chart(theta, k):
        # angle measured inside sector k = [rays[k], rays[k] + a / K]
        return (theta - rays[k]) % a

    def sector_of(theta):
        return int((theta % a) // (a / K)) % K

    # nodes: 0 apex, 1 p1, 2 p2, then ray k radius i
    node_r = [0.0, p1[0], p2[0]]
    node_t = [0.0, p1[1] % a, p2[1] % a]
    for k in range(K):
        node_r += list(rs)
        node_t += [rays[k]] * radii
    node_r = np.array(node_r)
    node_t = np.array(node_t)
    members = [[0] for _ in range(K)]
    for node in (1, 2):
        k = sector_of(node_t[node])
        members[k].append(node)
        if chart(node_t[node], k) == 0:
            members[(k - 1) % K].append(node)
    for k in range(K):
        base = 3 + k * radii
        members[k] += list(range(base, base + radii))
        nxt = 3 + ((k + 1) % K) * radii
        members[k] += list(range(nxt, nxt + radii))
    rows, cols, vals = [], [], []
    width = a / K
    for k in range(K):
        m = np.array(members[k])
        ang = np.array([chart(node_t[j], k) for j in m])
        ang[ang > width + 1e-12] = width  # start of the next sector sits at the far edge
        x = node_r[m] * np.cos(ang)
        y = node_r[m] * np.sin(ang)
        d = np.hypot(x[:, None] - x[None], y[:, None] - y[None])
        rows.append(np.repeat(m, len(m)))
        cols.append(np.tile(m, len(m)))
        vals.append(d.ravel() + 1e-300)
    g = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(len(node_r),) * 2).tocsr()
    dist, pred = dijkstra(g, indices=1, return_predecessors=True)
    path = [2]
    while path[-1] != 1:
        path.append(pred[path[-1]])
    path = path[::-1]
    # polish: the interior nodes of the path slide along their rays
    inner = path[1:-1]
    if not inner:
        return float(dist[2])

    def length(rad):
        pts_r = [p1[0]] + list(np.abs(rad)) + [p2[0]]
        pts_t = [node_t[1]] + [node_t[j] for j in inner] + [node_t[2]]
        total = 0.0
        for (r0, t0), (r1, t1) in zip(zip(pts_r, pts_t), zip(pts_r[1:], pts_t[1:])):
            gap = abs(t1 - t0) % a
            gap = min(gap, a - gap)
            total += np.sqrt(max(r0 * r0 + r1 * r1 - 2 * r0 * r1 * np.cos(min(gap, np.pi)), 0.0)) \
                if gap <= width + 1e-12 else r0 + r1
        return total

    x = node_r[inner]
    best = float(dist[2])
    # Nelder-Mead can stall on a collapsed simplex; restart until it stops improving
    for _ in range(10):
        res = minimize(length, x, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
        if res.fun >= best - 1e-15:
            break
        best, x = float(res.fun), res.x
    return best


def _segments_hit_triangle(p, q, a, b, c, eps: float = 1e-12) -> np.ndarray:
    """Which closed segments ``p[k] q[k]`` meet the closed triangle ``abc``."""
    n = np.cross(b - a, c - a)
    dp, dq = (p - a) @ n, (q - a) @ n
    hit = np.zeros(len(p), dtype=bool)
    # coplanar segments count as hits to stay conservative
    flat = np.abs(dp - dq) < eps
    hit |= flat & (np.abs(dp) < eps)
    cross = ~flat & (dp * dq <= eps)
    if np.any(cross):
        t = dp[cross] / (dp[cross] - dq[cross])
        x = p[cross] + t[:, None] * (q[cross] - p[cross])
        w0 = np.cross(b - a, x - a) @ n
        w1 = np.cross(c - b, x - b) @ n
        w2 = np.cross(a - c, x - c) @ n
        inside = ((w0 >= -eps) & (w1 >= -eps) & (w2 >= -eps)) | ((w0 <= eps) & (w1 <= eps) & (w2 <= eps))
        hit[np.nonzero(cross)[0][inside]] = True
    return hit


def random_unknot(rng, n: int = 24, moves: int = 400, step: float = 1.5) -> np.ndarray:
    """A tangled polygon that is isotopic to a round circle.

    Vertices of a circle are moved one at a time; a move is kept only when
    no other edge meets the two triangles it sweeps, so every accepted move
    is an isotopy.
    """
    th = 2 * np.pi * np.arange(n) / n
    v = np.stack([3 * np.cos(th), 3 * np.sin(th), np.zeros(n)], axis=1)
    idx = np.arange(n)
    for _ in range(moves):
        i = int(rng.integers(n))
        new = v[i] + rng.normal(size=3) * step
        prev, nxt = v[(i - 1) % n], v[(i + 1) % n]
        if min(np.linalg.norm(new - prev), np.linalg.norm(new - nxt)) <= 0.3:
            continue
        p0, q0 = v, v[(idx + 1) % n]
        # edges touching the moved pair are shrunk so shared endpoints do not count
        touching = np.isin(idx, [(i - 2) % n, (i + 1) % n])
        p = np.where(touching[:, None], p0 + 1e-6 * (q0 - p0), p0)
        q = np.where(touching[:, None], q0 - 1e-6 * (q0 - p0), q0)
        others = ~np.isin(idx, [(i - 1) % n, i])
        hits = _segments_hit_triangle(p, q, prev, v[i], new) | _segments_hit_triangle(p, q, v[i], nxt, new)
        if not np.any(hits & others):
            v[i] = new
    return v


def cauchy_perimeter(centers, offset: float, samples: int = 200_000) -> float:
    """Perimeter of the offset hull from its support function.

    For a planar convex body, perimeter is the integral of the support
    function over all directions; the offset adds ``offset`` to it.
    """
    th = 2 * np.pi * np.arange(samples) / samples
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    h = (np.asarray(centers, dtype=float) @ u.T).max(axis=0) + offset
    return float(h.sum() * 2 * np.pi / samples)
