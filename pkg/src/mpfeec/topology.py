"""Multipatch connectivity: edges, vertices, orientations and nestedness roles.

Patch sides are numbered south, east, north, west.  Each side is described by
the logical axis perpendicular to it and its constant coordinate e_perp, and
is parametrized by the remaining (parallel) logical coordinate.  An edge is
parametrized by the parallel coordinate t of its reference side, which is the
coarse side k- when it exists and the single fine side otherwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    GeometricNonConformity,
    NonNestedInterface,
    ParametrizationMismatch,
    PatchNotOnEdge,
)
from .univariate import is_nested

INHOMOGENEOUS = "inhomogeneous"
HOMOGENEOUS = "homogeneous"
GRAD_CURL = "grad-curl"
CURL_DIV = "curl-div"

# (perp_axis, e_perp) for south, east, north, west
SIDES = ((1, 0), (0, 1), (1, 1), (0, 0))
SIDE_NAMES = ("south", "east", "north", "west")


@dataclass(eq=False)
class Patch:
    id: int
    mapping: object
    spaces: object

    @property
    def space(self):
        return self.spaces.space

    @property
    def n(self):
        return self.spaces.n


def side_point(side, z):
    """Logical point (x1, x2) on a side at parallel coordinate z."""
    perp, e = SIDES[side]
    z = np.asarray(z, dtype=float)
    c = np.full_like(z, float(e))
    return (z, c) if perp == 1 else (c, z)


@dataclass(eq=False)
class EdgeSide:
    patch: int
    side: int

    @property
    def perp_axis(self):
        return SIDES[self.side][0]

    @property
    def par_axis(self):
        return 1 - SIDES[self.side][0]

    @property
    def e_perp(self):
        return SIDES[self.side][1]

    @property
    def det(self):
        """Determinant of the reordering (x_par, x_perp) -> (x1, x2)."""
        return 1 if self.perp_axis == 1 else -1

    def i_perp(self, n):
        return n * self.e_perp

    def to_logical(self, xpar, xperp):
        return (xpar, xperp) if self.perp_axis == 1 else (xperp, xpar)

    def from_logical(self, x1, x2):
        return (x1, x2) if self.perp_axis == 1 else (x2, x1)


@dataclass(eq=False)
class Edge:
    id: int
    sides: list
    flip: bool = False
    minus: EdgeSide | None = None
    plus: EdgeSide | None = None
    vertices: tuple = (None, None)

    @property
    def boundary(self):
        return len(self.sides) == 1

    @property
    def ref(self):
        """Side carrying the edge parameter t."""
        return self.minus if self.minus is not None else self.plus

    @property
    def patches(self):
        return [s.patch for s in self.sides]

    def side_of(self, k):
        for s in self.sides:
            if s.patch == k:
                return s
        raise PatchNotOnEdge(f"patch {k} is not adjacent to edge {self.id}")

    def eta(self, k, t):
        """Parallel coordinate on patch k of the edge point with parameter t."""
        t = np.asarray(t, dtype=float)
        if self.ref.patch == k or not self.flip:
            self.side_of(k)
            return t
        return 1.0 - t

    def vertex_at(self, t):
        return self.vertices[int(round(t))]


@dataclass(eq=False)
class VertexPatch:
    patch: int
    corner: tuple
    edge_a: int  # side x1 = corner[0]
    edge_b: int  # side x2 = corner[1]

    def index(self, n):
        return (n * self.corner[0], n * self.corner[1])


@dataclass(eq=False)
class Vertex:
    id: int
    position: np.ndarray
    patches: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    cyclic: bool = False
    sequences: list = field(default_factory=list)
    estar: int | None = None
    kstar: int | None = None
    violations: list = field(default_factory=list)

    @property
    def boundary(self):
        return not self.cyclic

    def entry(self, k):
        for vp in self.patches:
            if vp.patch == k:
                return vp
        raise PatchNotOnEdge(f"patch {k} does not touch vertex {self.id}")

    @property
    def patch_ids(self):
        return [vp.patch for vp in self.patches]


@dataclass(eq=False)
class MultipatchComplex:
    patches: list
    edges: list
    vertices: list
    bc_mode: str = INHOMOGENEOUS
    sequence_kind: str = GRAD_CURL
    tol: float = 1e-9

    @property
    def homogeneous(self):
        return self.bc_mode == HOMOGENEOUS

    def patch_edges(self, k):
        return [e for e in self.edges if k in e.patches]

    def edge_of_side(self, k, side):
        for e in self.edges:
            for s in e.sides:
                if s.patch == k and s.side == side:
                    return e
        raise PatchNotOnEdge(f"no edge on side {side} of patch {k}")

    def edge_vertices(self, e):
        return [self.vertices[i] for i in self.edges[e].vertices]

    def h_edge(self, e):
        """Smallest perpendicular width of the cells touching the edge."""
        edge = self.edges[e]
        return min(_end_width(self.patches[s.patch].space, s.e_perp) for s in edge.sides)

    def h_vertex(self, v):
        vert = self.vertices[v]
        out = np.inf
        for vp in vert.patches:
            sp_ = self.patches[vp.patch].space
            out = min(out, _end_width(sp_, vp.corner[0]), _end_width(sp_, vp.corner[1]))
        return float(out)

    def euler(self):
        return len(self.patches) - len(self.edges) + len(self.vertices)

    def to_dict(self):
        return {
            "bc_mode": self.bc_mode,
            "sequence_kind": self.sequence_kind,
            "patches": [{"id": p.id, "kind": p.mapping.kind, "params": _jsonable(p.mapping.params),
                         "degree": p.space.degree, "breakpoints": p.space.breakpoints.tolist()}
                        for p in self.patches],
            "edges": [{"id": e.id, "sides": [[s.patch, SIDE_NAMES[s.side]] for s in e.sides],
                       "flip": e.flip, "boundary": e.boundary,
                       "minus": None if e.minus is None else e.minus.patch,
                       "plus": None if e.plus is None else e.plus.patch,
                       "vertices": list(e.vertices)} for e in self.edges],
            "vertices": [{"id": v.id, "position": v.position.tolist(), "patches": v.patch_ids,
                          "edges": v.edges, "interior": v.cyclic, "sequences": v.sequences,
                          "estar": v.estar, "kstar": v.kstar, "violations": v.violations}
                         for v in self.vertices],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items() if not callable(v)}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _end_width(space, end):
    w = space.cell_widths
    return float(w[-1] if end else w[0])


def _side_xy(patch, side, z):
    return np.stack(patch.mapping(*side_point(side, z)), axis=-1)


def _dist_to_side(patch, side, P):
    f = lambda z: float(np.sum((_side_xy(patch, side, np.array([z]))[0] - P) ** 2))
    zs = np.linspace(0.0, 1.0, 65)
    d = np.sum((_side_xy(patch, side, zs) - P) ** 2, axis=1)
    j = int(np.argmin(d))
    lo, hi = zs[max(j - 1, 0)], zs[min(j + 1, 64)]
    r = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
    return np.sqrt(r.fun), r.x


def build_topology(patches, bc_mode=INHOMOGENEOUS, tol=1e-9, sequence_kind=GRAD_CURL):
    """Match patch sides into edges, cluster corners into vertices, assign roles."""
    plist = []
    for i, p in enumerate(patches):
        plist.append(p if isinstance(p, Patch) else Patch(i, p[0], p[1]))
    for i, p in enumerate(plist):
        p.id = i
    if not plist:
        raise ValueError("at least one patch is required")
    ends = {}
    for p in plist:
        for s in range(4):
            ends[(p.id, s)] = _side_xy(p, s, np.array([0.0, 1.0]))
    edges = []
    used = set()
    zs = np.linspace(0.0, 1.0, 17)
    for p in plist:
        for s in range(4):
            if (p.id, s) in used:
                continue
            A = ends[(p.id, s)]
            mate = None
            for q in plist[p.id + 1:]:
                for r in range(4):
                    if (q.id, r) in used:
                        continue
                    B = ends[(q.id, r)]
                    if np.abs(A - B).max() <= tol:
                        mate = (q, r, False)
                    elif np.abs(A - B[::-1]).max() <= tol:
                        mate = (q, r, True)
                    if mate:
                        break
                if mate:
                    break
            used.add((p.id, s))
            if mate is None:
                edges.append(Edge(len(edges), [EdgeSide(p.id, s)]))
                continue
            q, r, flip = mate
            used.add((q.id, r))
            xa = _side_xy(p, s, zs)
            xb = _side_xy(q, r, 1.0 - zs if flip else zs)
            scale = max(1.0, float(np.abs(xa).max()))
            if np.abs(xa - xb).max() > 1e-10 * scale:
                raise ParametrizationMismatch(
                    f"patches {p.id} and {q.id} share corners but not the side between them")
            edges.append(Edge(len(edges), [EdgeSide(p.id, s), EdgeSide(q.id, r)], flip))
    _check_conformity(plist, edges, tol)
    for e in edges:
        _assign_roles(plist, e, bc_mode)
    vertices = _build_vertices(plist, edges, tol)
    cx = MultipatchComplex(plist, edges, vertices, bc_mode, sequence_kind, tol)
    for v in vertices:
        _decompose(cx, v)
    return cx


def _check_conformity(plist, edges, tol):
    corners = []
    for p in plist:
        for c in p.mapping.corners():
            corners.append((p.id, c))
    for e in edges:
        for sd in e.sides:
            p = plist[sd.patch]
            A = _side_xy(p, sd.side, np.array([0.0, 1.0]))
            for k, c in corners:
                if k == sd.patch or np.abs(A - c).max(axis=1).min() <= tol:
                    continue
                d, z = _dist_to_side(p, sd.side, c)
                if d <= max(tol, 1e-9) and 1e-9 < z < 1 - 1e-9:
                    raise GeometricNonConformity(
                        f"corner of patch {k} lies inside side {SIDE_NAMES[sd.side]} of patch {p.id}")


def _assign_roles(plist, e, bc_mode):
    if e.boundary:
        if bc_mode == HOMOGENEOUS:
            e.plus = e.sides[0]
        else:
            e.minus = e.sides[0]
        return
    a, b = e.sides
    sa, sb = plist[a.patch].space, plist[b.patch].space
    if is_nested(sa, sb, e.flip):
        e.minus, e.plus = a, b
    elif is_nested(sb, sa, e.flip):
        e.minus, e.plus = b, a
    else:
        raise NonNestedInterface(f"patches {a.patch} and {b.patch} are not nested across edge {e.id}")


def _build_vertices(plist, edges, tol):
    pts = []
    for p in plist:
        for c, xy in zip(((0, 0), (1, 0), (1, 1), (0, 1)), p.mapping.corners()):
            pts.append((p.id, c, xy))
    vertices = []
    for k, c, xy in pts:
        for v in vertices:
            if np.abs(v.position - xy).max() <= tol:
                break
        else:
            v = Vertex(len(vertices), np.asarray(xy, dtype=float))
            vertices.append(v)
        v.patches.append(VertexPatch(k, c, -1, -1))
    side_edge = {}
    for e in edges:
        for s in e.sides:
            side_edge[(s.patch, s.side)] = e.id
    for v in vertices:
        for vp in v.patches:
            c1, c2 = vp.corner
            vp.edge_a = side_edge[(vp.patch, 3 if c1 == 0 else 1)]
            vp.edge_b = side_edge[(vp.patch, 0 if c2 == 0 else 2)]
    for e in edges:
        s = e.ref
        xy = _side_xy(plist[s.patch], s.side, np.array([0.0, 1.0]))
        ids = []
        for P in xy:
            ids.append(next(v.id for v in vertices if np.abs(v.position - P).max() <= tol))
        e.vertices = tuple(ids)
    for v in vertices:
        _order_fan(v, edges)
    return vertices


def _entry_exit(vp):
    """Counterclockwise-first and second v-edge of a patch at its corner."""
    s = (1 - 2 * vp.corner[0]) * (1 - 2 * vp.corner[1])
    return (vp.edge_b, vp.edge_a) if s > 0 else (vp.edge_a, vp.edge_b)


def _order_fan(v, edges):
    """Order patches counterclockwise by following shared edges."""
    by_entry = {}
    for vp in v.patches:
        a, b = _entry_exit(vp)
        by_entry.setdefault(a, []).append(vp)
    exits = {_entry_exit(vp)[1] for vp in v.patches}
    starts = [vp for vp in v.patches if _entry_exit(vp)[0] not in exits]
    if starts:
        start = min(starts, key=lambda vp: vp.patch)
        cyclic = False
    else:
        start = min(v.patches, key=lambda vp: vp.patch)
        cyclic = True
    order = [start]
    seen = {id(start)}
    while True:
        nxt = by_entry.get(_entry_exit(order[-1])[1], [])
        nxt = [w for w in nxt if id(w) not in seen]
        if not nxt:
            break
        order.append(nxt[0])
        seen.add(id(nxt[0]))
    if len(order) != len(v.patches):
        v.violations.append("patches around vertex do not form a single fan")
        order += [vp for vp in v.patches if id(vp) not in seen]
    v.patches = order
    v.cyclic = cyclic
    fan = [_entry_exit(vp)[0] for vp in order]
    if not cyclic:
        fan.append(_entry_exit(order[-1])[1])
    v.edges = fan


def _nested_pair(cx, a, b, e):
    """Whether patch a is nested in patch b across their shared edge e."""
    edge = cx.edges[e]
    return is_nested(cx.patches[a].space, cx.patches[b].space, edge.flip)


def _candidates(cx, v):
    P = v.patch_ids
    E = v.edges
    m = len(P)
    out = []
    nest = lambda a, b, e: _nested_pair(cx, P[a], P[b], E[e])
    if v.cyclic:
        for j in range(m):
            j1, jm, j2 = (j + 1) % m, (j - 1) % m, (j + 2) % m
            if nest(j, jm, j) and nest(j1, j2, (j + 2) % m):
                out.append((E[j1], [[P[j], P[jm]], [P[j1], P[j2]]], (P[j], P[j1])))
        return out
    if cx.homogeneous:
        if m == 1:
            out.append((None, [[P[0]]], ()))
        elif m == 2:
            if nest(0, 1, 1):
                out.append((None, [[P[0], P[1]]], ()))
            if nest(1, 0, 1):
                out.append((None, [[P[1], P[0]]], ()))
        elif m == 3:
            if nest(0, 1, 1):
                out.append((None, [[P[0], P[1]], [P[2]]], ()))
            if nest(2, 1, 2):
                out.append((None, [[P[2], P[1]], [P[0]]], ()))
        elif m == 4:
            if nest(0, 1, 1) and nest(3, 2, 3):
                out.append((None, [[P[0], P[1]], [P[3], P[2]]], ()))
        return out
    if m == 1:
        out.append((E[0], [[P[0]]], (P[0],)))
        out.append((E[1], [[P[0]]], (P[0],)))
    elif m == 2:
        if nest(0, 1, 1):
            out.append((E[0], [[P[0], P[1]]], (P[0],)))
        if nest(1, 0, 1):
            out.append((E[2], [[P[1], P[0]]], (P[1],)))
    elif m == 3:
        if nest(1, 2, 2):
            out.append((E[1], [[P[1], P[2]], [P[0]]], (P[0], P[1])))
        if nest(1, 0, 1):
            out.append((E[2], [[P[1], P[0]], [P[2]]], (P[1], P[2])))
    elif m == 4:
        if nest(1, 0, 1) and nest(2, 3, 3):
            out.append((E[2], [[P[1], P[0]], [P[2], P[3]]], (P[1], P[2])))
    return out


def _decompose(cx, v):
    m = len(v.patches)
    if v.cyclic and m != 4:
        v.violations.append("interior vertex must have 4 patches")
        return
    if m > 4:
        v.violations.append("vertex has more than 4 patches")
        return
    if v.violations:
        return
    cands = _candidates(cx, v)
    if not cands:
        v.violations.append("no decomposition into two nested sequences of adjacent patches")
        return
    dims = {k: cx.patches[k].space.dim for k in v.patch_ids}

    def key(c):
        estar, _, coarse = c
        return (min((dims[k] for k in coarse), default=0), -1 if estar is None else estar)

    estar, seqs, coarse = min(cands, key=key)
    v.sequences = seqs
    if estar is not None:
        v.estar = estar
        edge = cx.edges[estar]
        v.kstar = edge.minus.patch if edge.minus is not None else min(coarse)


@dataclass
class ValidationReport:
    valid: bool
    violations: list
    euler: int
    vertices: list
    edges: list

    def to_dict(self):
        return {"valid": self.valid, "violations": self.violations, "euler": self.euler,
                "vertices": self.vertices, "edges": self.edges}


def validate_assumptions(cx):
    """Report every violated edge or vertex nestedness condition; never raises."""
    violations = []
    vrec = []
    for v in cx.vertices:
        for msg in v.violations:
            violations.append(f"vertex {v.id}: {msg}")
        members = [k for s in v.sequences for k in s]
        if v.sequences and sorted(members) != sorted(v.patch_ids):
            violations.append(f"vertex {v.id}: sequences do not partition the contiguous patches")
        vrec.append({"id": v.id, "interior": v.cyclic, "patches": v.patch_ids,
                     "sequences": v.sequences, "estar": v.estar, "kstar": v.kstar})
    erec = []
    for e in cx.edges:
        rec = {"id": e.id, "boundary": e.boundary, "flip": e.flip}
        if not e.boundary:
            a, b = (cx.patches[s.patch] for s in (e.minus, e.plus))
            rec["H_ratio"] = a.mapping.diameter() / b.mapping.diameter()
            rec["n_ratio"] = a.n / b.n
            if not is_nested(a.space, b.space, e.flip):
                violations.append(f"edge {e.id}: coarse side not nested in fine side")
        erec.append(rec)
    return ValidationReport(not violations, violations, cx.euler(), vrec, erec)


@dataclass(frozen=True)
class EdgeFrame:
    edge: int
    patch: int
    par_axis: int
    perp_axis: int
    e_perp: int
    i_perp: int
    det: int
    flip: bool

    def to_logical(self, xpar, xperp):
        return (xpar, xperp) if self.perp_axis == 1 else (xperp, xpar)

    def from_logical(self, x1, x2):
        return (x1, x2) if self.perp_axis == 1 else (x2, x1)

    def eta(self, z):
        return 1.0 - np.asarray(z) if self.flip else np.asarray(z)


def edge_frame(cx, e, k):
    edge = cx.edges[e]
    s = edge.side_of(k)
    flip = bool(edge.flip and edge.ref.patch != k)
    return EdgeFrame(e, k, s.par_axis, s.perp_axis, s.e_perp, s.i_perp(cx.patches[k].n),
                     s.det, flip)
