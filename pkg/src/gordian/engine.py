"""
Constrained relaxation of a thick link.

Each step pushes the curves with a splitting force and then projects back
onto the constraint set: fixed edge lengths, minimum turning radius and
minimum distance between non-local strands. The scheme is in the spirit of
SONO (shrink on no overlaps) with SHAKE-style length projection. Runs are
carried out at thickness ``1 - epsilon`` so that reported lengths can be
rescaled by ``1 / (1 - epsilon)`` to a truly 1-thick link.

Component 0 is ``L1`` and component 1 is ``L2`` throughout.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from .cone import cone_angle, cone_over, dotted_components
from .errors import (DegenerateCurveError, GenericityError, GeometryError, InvariantViolation,
                     StallError, ValidationError)
from .geom import PolyCurve, ThickLink, centroid, curve_length, linking_number, segment_closest
from .thickness import link_thickness

log = logging.getLogger(__name__)

LENGTH_TOL = 1e-6
MIRROR_TOL = 1e-9
THICKNESS_SLACK = 1e-3
CONE_SLACK = 1e-6
LOCALITY_SLACK = 0.05
DT_FLOOR_FACTOR = 1.0 / 1024
DT_GROWTH = 1.1
TRACE_COLUMNS = ("step", "time", "length_L1", "length_L2", "thickness", "separation_margin",
                 "dotted_count", "signed_dots", "cone_angle")


# --------------------------------------------------------------------------
# configuration and state
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ForceSpec:
    """Splitting force.

    ``mode`` is one of

    * ``"stretch"``: L2 vertices above ``z = 0`` move up, those below move
      down (keeps the reflection symmetry);
    * ``"direction"``: every L2 vertex moves along ``direction``;
    * ``"separating"``: L2 moves along the best separating direction found
      at the last checkpoint;
    * ``"none"``.

    ``well`` is the stiffness of the harmonic well holding L1 near its rest
    shape.
    """

    mode: str = "stretch"
    magnitude: float = 1.0
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    well: float = 1.0

    def __post_init__(self):
        if self.mode not in ("stretch", "direction", "separating", "none"):
            raise ValidationError(f"unknown force mode {self.mode!r}")
        if not (self.magnitude >= 0 and self.well >= 0):
            raise ValidationError("force magnitude and well stiffness must be nonnegative")
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,) or not np.linalg.norm(d) > 0:
            raise ValidationError("force direction must be a nonzero 3-vector")
        object.__setattr__(self, "direction", tuple(float(x) for x in d))


@dataclass(frozen=True)
class EngineConfig:
    dt: float = 1e-3
    force: ForceSpec = field(default_factory=ForceSpec)
    shake_iterations: int = 20
    overlap_iterations: int = 3
    epsilon: float = 0.01
    checkpoint_every: int = 1000
    max_steps: int = 100_000
    seed: int = 0
    mirror: bool = True
    stop_on_split: bool = True

    def __post_init__(self):
        if isinstance(self.force, dict):
            object.__setattr__(self, "force", ForceSpec(**self.force))
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if not 0 < self.epsilon <= 0.1:
            raise ValidationError("epsilon must lie in (0, 0.1]")
        for name in ("shake_iterations", "overlap_iterations", "checkpoint_every"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be an integer >= 1")
        if int(self.max_steps) != self.max_steps or self.max_steps < 0:
            raise ValidationError("max_steps must be a nonnegative integer")

    @property
    def target(self) -> float:
        """Strand distance the overlap resolver aims for."""
        return 2.0 * (1.0 - 0.5 * self.epsilon)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> EngineConfig:
        extra = set(data) - set(cls.__dataclass_fields__)
        if extra:
            raise ValidationError(f"unknown engine keys: {sorted(extra)}")
        data = dict(data)
        if "force" in data:
            f = data["force"]
            if not isinstance(f, dict):
                raise ValidationError("force must be an object")
            extra = set(f) - set(ForceSpec.__dataclass_fields__)
            if extra:
                raise ValidationError(f"unknown force keys: {sorted(extra)}")
            data["force"] = ForceSpec(**f)
        return cls(**data)


@dataclass(frozen=True, eq=False)
class SimState:
    link: ThickLink
    reference_edge_lengths: tuple[np.ndarray, ...]
    step_index: int = 0
    time_stamp: float = 0.0
    rest: tuple[np.ndarray, ...] = ()
    push_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    # step size the next step starts from; 0 means the configured dt
    dt_hint: float = 0.0

    @classmethod
    def initial(cls, link: ThickLink) -> SimState:
        if len(link.components) != 2:
            raise ValidationError("the engine works on two-component links")
        refs = tuple(np.array(c.edge_lengths()) for c in link.components)
        rest = tuple(np.array(c.vertices) for c in link.components)
        for a in refs + rest:
            a.setflags(write=False)
        return cls(link, refs, 0, 0.0, rest)


@dataclass
class SplitAttemptReport:
    best_separation: float
    best_direction: tuple[float, float, float]
    final_state: SimState
    constraint_drift: dict
    dot_history: list
    terminated: str
    trace: list = field(default_factory=list)
    stalls: int = 0
    message: str = ""

    @property
    def split(self) -> bool:
        return self.best_separation > 0

    def to_dict(self) -> dict:
        return {
            "best_separation": self.best_separation,
            "best_direction": list(self.best_direction),
            "constraint_drift": self.constraint_drift,
            "dot_history": [list(map(_jsonable, h)) for h in self.dot_history],
            "terminated": self.terminated,
            "split": self.split,
            "steps": self.final_state.step_index,
            "stalls": self.stalls,
            "message": self.message,
        }

    def trace_csv(self) -> str:
        return trace_to_csv(self.trace)


def _jsonable(x):
    if isinstance(x, tuple):
        return list(x)
    return x


def trace_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in rows:
        w.writerow(["" if row[c] is None else row[c] for c in TRACE_COLUMNS])
    return buf.getvalue()


# --------------------------------------------------------------------------
# topology helpers (cached per link shape)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Topology:
    sizes: tuple[int, ...]
    offsets: np.ndarray          # first global vertex of each component
    edge_a: np.ndarray           # global start vertex of each edge
    edge_b: np.ndarray           # global end vertex of each edge
    edge_comp: np.ndarray
    edge_local: np.ndarray
    arclen: np.ndarray           # reference arclength of each edge midpoint
    totals: np.ndarray           # reference length per component
    lmax: float
    mirror_perm: np.ndarray      # global vertex -> its mirror partner
    vertex_prev: np.ndarray      # global vertex -> preceding vertex


def _topology(state: SimState) -> _Topology:
    sizes = tuple(len(c) for c in state.link.components)
    key = (sizes, tuple(r.tobytes() for r in state.reference_edge_lengths))
    return _topology_cached(key)


@lru_cache(maxsize=16)
def _topology_cached(key) -> _Topology:
    sizes, ref_bytes = key
    refs = [np.frombuffer(b) for b in ref_bytes]
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    ea, eb, ec, el, arc = [], [], [], [], []
    perm, prev = [], []
    for k, n in enumerate(sizes):
        loc = np.arange(n)
        ea.append(offsets[k] + loc)
        eb.append(offsets[k] + (loc + 1) % n)
        ec.append(np.full(n, k))
        el.append(loc)
        arc.append(np.cumsum(refs[k]) - 0.5 * refs[k])
        perm.append(offsets[k] + (k == 1) * ((-loc) % n) + (k != 1) * loc)
        prev.append(offsets[k] + (loc - 1) % n)
    return _Topology(sizes, offsets, np.concatenate(ea), np.concatenate(eb), np.concatenate(ec),
                     np.concatenate(el), np.concatenate(arc),
                     np.array([r.sum() for r in refs]), float(max(r.max() for r in refs)),
                     np.concatenate(perm), np.concatenate(prev))


def _positions(link: ThickLink) -> np.ndarray:
    return np.vstack([c.vertices for c in link.components])


def _rebuild(state: SimState, pos: np.ndarray, **changes) -> SimState:
    topo = _topology(state)
    comps = []
    for k, n in enumerate(topo.sizes):
        o = topo.offsets[k]
        comps.append(PolyCurve(pos[o:o + n], closed=True))
    link = ThickLink(tuple(comps), state.link.radius, state.link.meta)
    return replace(state, link=link, **changes)


# --------------------------------------------------------------------------
# constraint pieces
# --------------------------------------------------------------------------

class NeighbourList:
    """Verlet list of candidate edge pairs.

    Pairs whose midpoints lie within ``reach + lmax + skin`` are stored
    together with the positions they were built from. The list stays valid
    (no pair closer than ``reach`` can be missing) until some vertex has
    moved more than ``skin / 2``, after which it is rebuilt.
    """

    def __init__(self, topo: _Topology, reach: float, skin: float = 0.3):
        self.topo = topo
        self.reach = reach
        self.skin = skin
        self.anchor = None
        self.pairs = None
        self.rebuilds = 0
        self._filtered: dict = {}

    def _build(self, pos: np.ndarray):
        topo = self.topo
        mids = 0.5 * (pos[topo.edge_a] + pos[topo.edge_b])
        pairs = cKDTree(mids).query_pairs(self.reach + topo.lmax + self.skin, output_type="ndarray")
        if len(pairs):
            e, f = pairs[:, 0], pairs[:, 1]
            n = np.asarray(topo.sizes)[topo.edge_comp[e]]
            gap = np.abs(topo.edge_local[e] - topo.edge_local[f])
            gap = np.minimum(gap, n - gap)
            pairs = pairs[(topo.edge_comp[e] != topo.edge_comp[f]) | (gap > 1)]
        self.pairs = pairs.reshape(-1, 2)
        self.anchor = pos.copy()
        self.rebuilds += 1

    def candidates(self, pos: np.ndarray, cutoff: float):
        """Stored pairs that are not local at scale ``cutoff``."""
        if cutoff > self.reach:
            raise ValueError("cutoff exceeds the neighbour list reach")
        if (self.anchor is None or self.anchor.shape != pos.shape
                or np.max(np.abs(pos - self.anchor)) * math.sqrt(3) > 0.5 * self.skin):
            self._build(pos)
            self._filtered = {}
        if cutoff not in self._filtered:
            topo = self.topo
            e, f = self.pairs[:, 0], self.pairs[:, 1]
            comp = topo.edge_comp[e]
            arc = np.abs(topo.arclen[e] - topo.arclen[f])
            arc = np.minimum(arc, topo.totals[comp] - arc)
            local = (comp == topo.edge_comp[f]) & (arc <= 0.5 * math.pi * cutoff * (1 + LOCALITY_SLACK))
            self._filtered[cutoff] = (e[~local], f[~local])
        return self._filtered[cutoff]


def _near_pairs(pos: np.ndarray, topo: _Topology, cutoff: float, nlist: NeighbourList | None = None):
    """Non-local edge pairs whose distance is below ``cutoff``.

    Returns ``(e, f, dist, s, t)`` with closest-point parameters.
    """
    if nlist is None:
        nlist = NeighbourList(topo, cutoff, skin=0.0)
    e, f = nlist.candidates(pos, cutoff)
    a = pos[topo.edge_a]
    b = pos[topo.edge_b]
    if len(e):
        # edges are at most lmax long, so midpoints farther than
        # cutoff + lmax apart cannot hold a close pair
        mids = a + b
        gap = mids[e] - mids[f]
        reach = 2.0 * (cutoff + topo.lmax)
        near = np.einsum("ij,ij->i", gap, gap) < reach * reach
        e, f = e[near], f[near]
    if not len(e):
        z = np.zeros(0, dtype=np.int64)
        return z, z, np.zeros(0), np.zeros(0), np.zeros(0)
    d, s, t = segment_closest(a[e], b[e], a[f], b[f])
    close = d < cutoff
    return e[close], f[close], d[close], s[close], t[close]


def _push_apart(pos: np.ndarray, topo: _Topology, target: float,
                nlist: NeighbourList | None = None) -> tuple[np.ndarray, int]:
    e, f, d, s, t = _near_pairs(pos, topo, target, nlist)
    if not len(e):
        return pos, 0
    a = pos[topo.edge_a]
    b = pos[topo.edge_b]
    p = a[e] + s[:, None] * (b[e] - a[e])
    q = a[f] + t[:, None] * (b[f] - a[f])
    u = p - q
    norm = np.linalg.norm(u, axis=1)
    if np.any(norm <= 1e-12):
        raise GeometryError("strands intersect")
    u /= norm[:, None]
    move = 0.5 * (target - d)[:, None] * u
    # Jacobi sweep: each vertex takes the mean of the pushes it receives, so
    # a strand pressed by many edges at once does not overshoot
    acc = np.zeros_like(pos)
    cnt = np.zeros(len(pos))
    for idx, par, sgn in ((e, s, 1.0), (f, t, -1.0)):
        wa = (1 - par) / ((1 - par) ** 2 + par ** 2)
        wb = par / ((1 - par) ** 2 + par ** 2)
        np.add.at(acc, topo.edge_a[idx], sgn * wa[:, None] * move)
        np.add.at(acc, topo.edge_b[idx], sgn * wb[:, None] * move)
        np.add.at(cnt, topo.edge_a[idx], 1 - par)
        np.add.at(cnt, topo.edge_b[idx], par)
    hit = cnt > 0
    out = pos.copy()
    out[hit] += acc[hit] / np.maximum(cnt[hit], 1.0)[:, None]
    return out, len(e)


def _turning(pos: np.ndarray, topo: _Topology):
    """Turning angle and shorter adjacent edge at every vertex."""
    prev = pos[topo.vertex_prev]
    nxt = pos[topo.edge_b]
    e_in = pos - prev
    e_out = nxt - pos
    cr = np.cross(e_in, e_out)
    phi = np.arctan2(np.sqrt(np.einsum("ij,ij->i", cr, cr)), np.einsum("ij,ij->i", e_in, e_out))
    lmin = np.sqrt(np.minimum(np.einsum("ij,ij->i", e_in, e_in), np.einsum("ij,ij->i", e_out, e_out)))
    return phi, lmin, prev, nxt


def _straighten(pos: np.ndarray, topo: _Topology, radius: float) -> tuple[np.ndarray, int]:
    """Pull sharp vertices toward their neighbours' midpoint."""
    phi, lmin, prev, nxt = _turning(pos, topo)
    phi_max = 2.0 * np.arctan(lmin / (2.0 * radius))
    bad = phi > phi_max
    if not np.any(bad):
        return pos, 0
    out = pos.copy()
    lam = np.minimum(1.0, 1.05 * (1.0 - phi_max[bad] / phi[bad]))
    mid = 0.5 * (prev[bad] + nxt[bad])
    out[bad] += lam[:, None] * (mid - pos[bad])
    return out, int(bad.sum())


def _cyclic_tridiag_solve(diag, off, rhs):
    """Solve the symmetric cyclic tridiagonal system.

    ``off[i]`` couples unknowns ``i`` and ``i + 1`` (mod n).
    """
    n = len(diag)
    corner = off[-1]
    gamma = -diag[0]
    d = diag.copy()
    d[0] -= gamma
    d[-1] -= corner * corner / gamma
    ab = np.zeros((3, n))
    ab[0, 1:] = off[:-1]
    ab[1] = d
    ab[2, :-1] = off[:-1]
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = corner
    sol = solve_banded((1, 1), ab, np.column_stack([rhs, u]), check_finite=False)
    y, z = sol[:, 0], sol[:, 1]
    vy = y[0] + corner / gamma * y[-1]
    vz = z[0] + corner / gamma * z[-1]
    return y - (vy / (1.0 + vz)) * z


def shake(v: np.ndarray, ref: np.ndarray, iterations: int, tol: float = 1e-12) -> np.ndarray:
    """Newton projection of a closed polygon onto prescribed edge lengths.

    Each iteration solves ``J J^T lam = -c`` for the constraints
    ``c_e = (|d_e|^2 - L_e^2) / 2`` and applies the minimum-norm correction
    ``J^T lam``.
    """
    v = v.copy()
    n = len(v)
    nxt = np.arange(1, n + 1) % n
    prv = np.arange(-1, n - 1) % n
    ref2 = ref * ref
    for _ in range(iterations):
        d = v[nxt] - v
        sq = np.einsum("ij,ij->i", d, d)
        c = 0.5 * (sq - ref2)
        if np.max(np.abs(c) / ref2) <= tol:
            break
        off = -np.einsum("ij,ij->i", d, d[nxt])
        lam = _cyclic_tridiag_solve(2.0 * sq, off, -c)
        # vertex i ends edge i - 1 and starts edge i
        g = d * lam[:, None]
        v += g[prv] - g
    return v


def _shake_all(pos: np.ndarray, topo: _Topology, refs, iterations: int) -> np.ndarray:
    out = pos.copy()
    for k, n in enumerate(topo.sizes):
        o = topo.offsets[k]
        out[o:o + n] = shake(pos[o:o + n], refs[k], iterations)
    return out


def _symmetrize(pos: np.ndarray, topo: _Topology) -> np.ndarray:
    mirrored = pos[topo.mirror_perm] * np.array([1.0, 1.0, -1.0])
    return 0.5 * (pos + mirrored)


def _length_drift(pos: np.ndarray, topo: _Topology, refs) -> float:
    worst = 0.0
    for k, n in enumerate(topo.sizes):
        o = topo.offsets[k]
        v = pos[o:o + n]
        lengths = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        worst = max(worst, float(np.max(np.abs(lengths - refs[k]) / refs[k])))
    return worst


def _mirror_error(pos: np.ndarray, topo: _Topology) -> float:
    mirrored = pos[topo.mirror_perm] * np.array([1.0, 1.0, -1.0])
    return float(np.max(np.abs(pos - mirrored)))


def _min_turning_radius(pos: np.ndarray, topo: _Topology) -> float:
    phi, lmin, _, _ = _turning(pos, topo)
    if np.any(phi >= math.pi - 1e-9):
        return 0.0
    with np.errstate(divide="ignore"):
        r = np.where(phi > 0, lmin / (2.0 * np.tan(0.5 * phi)), np.inf)
    return float(r.min())


def _is_thick(pos: np.ndarray, topo: _Topology, r: float, nlist: NeighbourList | None = None) -> bool:
    if _min_turning_radius(pos, topo) < r:
        return False
    e, *_ = _near_pairs(pos, topo, 2.0 * r, nlist)
    return len(e) == 0


# --------------------------------------------------------------------------
# stepping
# --------------------------------------------------------------------------

def _force(pos: np.ndarray, state: SimState, topo: _Topology, cfg: EngineConfig, dt: float) -> np.ndarray:
    out = pos.copy()
    f = cfg.force
    o1, n1 = topo.offsets[0], topo.sizes[0]
    o2, n2 = topo.offsets[1], topo.sizes[1]
    if f.well > 0 and state.rest:
        rest = state.rest[0]
        out[o1:o1 + n1] -= min(1.0, f.well * dt) * (pos[o1:o1 + n1] - rest)
    if f.mode == "none" or f.magnitude == 0:
        return out
    v2 = pos[o2:o2 + n2]
    if f.mode == "stretch":
        dz = np.sign(v2[:, 2])
        out[o2:o2 + n2, 2] += dt * f.magnitude * dz
    else:
        d = np.asarray(f.direction if f.mode == "direction" else state.push_direction, dtype=float)
        d = d / np.linalg.norm(d)
        out[o2:o2 + n2] += dt * f.magnitude * d
    return out


def _try_step(state: SimState, cfg: EngineConfig, dt: float, nlist: NeighbourList):
    topo = nlist.topo
    refs = state.reference_edge_lengths
    pos = _force(_positions(state.link), state, topo, cfg, dt)
    rt = 1.0 - 0.5 * cfg.epsilon
    for it in range(cfg.overlap_iterations):
        pos, pushed = _push_apart(pos, topo, cfg.target, nlist)
        if not pushed and it > 0:
            break
        pos, _ = _straighten(pos, topo, rt)
        pos = _shake_all(pos, topo, refs, cfg.shake_iterations)
    if cfg.mirror:
        pos = _symmetrize(pos, topo)
        pos = _shake_all(pos, topo, refs, cfg.shake_iterations)
    drift = _length_drift(pos, topo, refs)
    if not np.all(np.isfinite(pos)) or drift > LENGTH_TOL:
        return None, f"length drift {drift:.3g}"
    if cfg.mirror and _mirror_error(pos, topo) > MIRROR_TOL:
        return None, "mirror symmetry lost"
    if not _is_thick(pos, topo, 1.0 - cfg.epsilon, nlist):
        return None, "thickness constraint violated"
    return pos, ""


def step(s: SimState, cfg: EngineConfig, nlist: NeighbourList | None = None) -> SimState:
    """One accepted relaxation step.

    A step whose result violates a constraint is retried with half the
    time step; below ``dt / 1024`` a :class:`StallError` is raised. The
    next step starts from the accepted step size grown by ``DT_GROWTH``,
    capped at ``cfg.dt``, so a run does not keep paying for attempts
    that are bound to be rejected. Pass the same ``nlist`` to
    consecutive calls to reuse pair searches.
    """
    if nlist is None:
        nlist = NeighbourList(_topology(s), cfg.target)
    dt = min(cfg.dt, s.dt_hint) if s.dt_hint > 0 else cfg.dt
    floor = cfg.dt * DT_FLOOR_FACTOR
    while True:
        try:
            pos, why = _try_step(s, cfg, dt, nlist)
        except (GeometryError, np.linalg.LinAlgError) as exc:
            pos, why = None, str(exc)
        if pos is not None:
            return _rebuild(s, pos, step_index=s.step_index + 1, time_stamp=s.time_stamp + dt,
                            dt_hint=min(cfg.dt, dt * DT_GROWTH))
        dt *= 0.5
        if dt < floor:
            raise StallError(f"step {s.step_index}: {why}")


# --------------------------------------------------------------------------
# separation certificate
# --------------------------------------------------------------------------

def _icosahedral_directions() -> np.ndarray:
    g = (1 + math.sqrt(5)) / 2
    verts = []
    for a in (-1, 1):
        for b in (-g, g):
            verts += [(0, a, b), (a, b, 0), (b, 0, a)]
    verts = np.array(verts, dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    dots = verts @ verts.T
    edge = np.isclose(dots, dots[~np.eye(12, dtype=bool)].max())
    mids = [verts[i] + verts[j] for i in range(12) for j in range(i + 1, 12) if edge[i, j]]
    faces = [verts[i] + verts[j] + verts[k] for i in range(12) for j in range(i + 1, 12)
             for k in range(j + 1, 12) if edge[i, j] and edge[j, k] and edge[i, k]]
    out = np.vstack([verts, np.array(mids), np.array(faces)])
    return out / np.linalg.norm(out, axis=1)[:, None]


ICOSAHEDRAL = _icosahedral_directions()


def _margin_along(d, v1, v2, radius) -> float:
    d = d / np.linalg.norm(d)
    return float((v1 @ d).min() - (v2 @ d).max() - 2.0 * radius)


def separation_margin(link: ThickLink, refine: int = 3) -> tuple[float, np.ndarray]:
    """Best signed slab gap between the two thick components.

    A positive value certifies a plane with normal ``direction`` that has
    the first tube strictly on its positive side and the second on its
    negative side, with room to spare.
    """
    if len(link.components) != 2:
        raise ValidationError("separation needs exactly two components")
    v1, v2 = (c.vertices for c in link.components)
    r = link.radius
    vals = np.array([_margin_along(d, v1, v2, r) for d in ICOSAHEDRAL])
    best = int(np.argmax(vals))
    best_val, best_dir = float(vals[best]), ICOSAHEDRAL[best]

    def obj(x):
        d = np.array([math.sin(x[0]) * math.cos(x[1]), math.sin(x[0]) * math.sin(x[1]), math.cos(x[0])])
        return -_margin_along(d, v1, v2, r)

    for idx in np.argsort(-vals)[:refine]:
        d0 = ICOSAHEDRAL[idx]
        x0 = np.array([math.acos(np.clip(d0[2], -1, 1)), math.atan2(d0[1], d0[0])])
        res = minimize(obj, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400})
        if -res.fun > best_val:
            x = res.x
            best_val = float(-res.fun)
            best_dir = np.array([math.sin(x[0]) * math.cos(x[1]), math.sin(x[0]) * math.sin(x[1]),
                                 math.cos(x[0])])
    return best_val, best_dir


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------

def _dots(link: ThickLink, radius: float, seed: int):
    l1, l2 = link.components
    apex = centroid(l1)
    rng = np.random.default_rng(seed)
    last = None
    for _ in range(4):
        try:
            disk = cone_over(l1, apex)
            return disk, dotted_components(disk, l2, radius)
        except GenericityError as exc:
            last = exc
            apex = apex + rng.normal(size=3) * 1e-6
    raise last


def checkpoint(state: SimState, cfg: EngineConfig) -> dict:
    """Diagnostics recorded in the trace at a checkpoint."""
    link = state.link
    scale = 1.0 / (1.0 - cfg.epsilon)
    l1, l2 = link.components
    thick = link_thickness(link).thickness
    margin, direction = separation_margin(ThickLink(link.components, 1.0 - cfg.epsilon))
    disk, dots = _dots(link, 1.0 - cfg.epsilon, cfg.seed)
    return {
        "step": state.step_index,
        "time": state.time_stamp,
        "length_L1": curve_length(l1) * scale,
        "length_L2": curve_length(l2) * scale,
        "thickness": thick,
        "separation_margin": margin,
        "dotted_count": dots.dotted_count,
        "signed_dots": dots.total_signed_dots,
        "cone_angle": cone_angle(disk),
        "_direction": tuple(float(x) for x in direction),
        "_signs": tuple(tuple(c.dot_signs) for c in dots.components if c.contains_dot),
        "_mirror": _mirror_error(_positions(link), _topology(state)),
    }


def check_invariants(row: dict, cfg: EngineConfig, linking: int) -> list[str]:
    """Checkpoint invariants; returns a list of violations."""
    bad = []
    if row["thickness"] < 1.0 - cfg.epsilon - THICKNESS_SLACK:
        bad.append(f"thickness {row['thickness']:.6f} below {1 - cfg.epsilon - THICKNESS_SLACK}")
    if cfg.mirror:
        if row["_mirror"] > MIRROR_TOL:
            bad.append(f"mirror defect {row['_mirror']:.3g}")
        if row["cone_angle"] < 2 * math.pi - CONE_SLACK:
            bad.append(f"cone angle {row['cone_angle']:.9f} below 2 pi")
        # a 1-thick L1 shorter than 4 pi + 6 bounds the dotted components by two
        if row["length_L1"] < 4 * math.pi + 6 - 1e-6 and row["dotted_count"] > 2:
            bad.append(f"{row['dotted_count']} dotted components")
    if row["signed_dots"] != linking:
        bad.append(f"signed dots {row['signed_dots']} differ from linking number {linking}")
    return bad


def attempt_split(link: ThickLink, cfg: EngineConfig,
                  on_checkpoint: Callable[[SimState, dict], None] | None = None) -> SplitAttemptReport:
    """Relax the link under the splitting force and look for a separating plane.

    Stops on a split certificate (``margin > 0``, unless
    ``cfg.stop_on_split`` is off), on a stall, or when the step budget is
    spent. A failed invariant raises :class:`InvariantViolation` carrying
    the offending checkpoint.
    """
    state = SimState.initial(link)
    linking = linking_number(*link.components, seed=cfg.seed)
    trace: list[dict] = []
    dot_history: list = []
    best = -math.inf
    best_dir = (0.0, 0.0, 1.0)
    max_drift = 0.0
    min_thick = math.inf
    stalls = 0
    topo = _topology(state)
    nlist = NeighbourList(topo, cfg.target)

    def record(st: SimState) -> dict:
        nonlocal best, best_dir, min_thick
        row = checkpoint(st, cfg)
        trace.append({k: v for k, v in row.items() if not k.startswith("_")})
        dot_history.append((st.step_index, row["dotted_count"], row["_signs"]))
        min_thick = min(min_thick, row["thickness"])
        if row["separation_margin"] > best:
            best = row["separation_margin"]
            best_dir = row["_direction"]
        bad = check_invariants(row, cfg, linking)
        if on_checkpoint is not None:
            on_checkpoint(st, row)
        if bad:
            raise InvariantViolation(f"step {st.step_index}: " + "; ".join(bad))
        log.info("step %d margin %.4f dots %d thickness %.5f", st.step_index,
                 row["separation_margin"], row["dotted_count"], row["thickness"])
        return row

    def report(reason: str, msg: str = "") -> SplitAttemptReport:
        return SplitAttemptReport(best, best_dir, state, {"max_edge_drift": max_drift,
                                                          "min_thickness": min_thick},
                                  dot_history, reason, trace, stalls, msg)

    row = record(state)
    state = replace(state, push_direction=tuple(-x for x in row["_direction"]))
    # a zero budget is a pure no-op: report the initial margin as a budget stop
    if best > 0 and cfg.stop_on_split and cfg.max_steps > 0:
        return report("split")
    for _ in range(cfg.max_steps):
        try:
            state = step(state, cfg, nlist)
        except StallError as exc:
            stalls += 1
            if state.step_index % cfg.checkpoint_every:
                record(state)
            return report("stall", str(exc))
        max_drift = max(max_drift, _length_drift(_positions(state.link), topo,
                                                 state.reference_edge_lengths))
        if state.step_index % cfg.checkpoint_every == 0 or state.step_index == cfg.max_steps:
            row = record(state)
            state = replace(state, push_direction=tuple(-x for x in row["_direction"]))
            if best > 0 and cfg.stop_on_split:
                return report("split")
    return report("budget")


def state_to_json(state: SimState) -> str:
    data = state.link.to_dict()
    data["step"] = state.step_index
    data["time"] = state.time_stamp
    return json.dumps(data)
