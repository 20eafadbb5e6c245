"""Conforming basis of V^0_h, local broken/conforming projectors, and domain extensions.

All operators are sparse matrices acting on the global broken 0-form vector
(patch blocks in id order, each flattened with i1 fastest).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .broken import BrokenField, layout, value_jump
from .errors import InvalidSequences, InvalidTarget, RegionOutsideNeighborhood
from .logical import extension_index_set
from .univariate import expansion_matrix

KINDS = ("Ik0", "Ie", "Pe", "Ie0", "Pe0", "Iv", "Pv", "IbarV", "Iev", "Pev", "IbarEv")


@dataclass(frozen=True)
class BasisEntry:
    tag: str
    target: int
    index: tuple = ()


class ConformingLayer:
    """Cached conforming-basis data and local projectors for a complex."""

    def __init__(self, cx):
        self.cx = cx
        self.lay = layout(cx, 0)
        self.N = self.lay.total
        self._cache = {}

    def gidx(self, k, i1, i2):
        n = self.cx.patches[k].n
        return int(self.lay.offsets[k]) + int(i1) + (n + 1) * int(i2)

    def side_index(self, side, k, j, iperp=None):
        n = self.cx.patches[k].n
        ip = side.i_perp(n) if iperp is None else iperp
        return self.gidx(k, *side.to_logical(j, ip))

    def corner_index(self, v, k):
        vp = self.cx.vertices[v].entry(k)
        n = self.cx.patches[k].n
        return self.gidx(k, n * vp.corner[0], n * vp.corner[1])

    def n_edge(self, e):
        return self.cx.patches[self.cx.edges[e].ref.patch].n

    def i_edge_vertex(self, e, v):
        """Edge-parallel index of v in the reference side of e."""
        edge = self.cx.edges[e]
        if v not in edge.vertices:
            raise InvalidTarget(f"vertex {v} is not an end of edge {e}")
        return 0 if edge.vertices[0] == v else self.n_edge(e)

    def edge_functions(self, e):
        """Sparse N x (n_e+1) matrix whose columns are the edge-continuous functions."""
        key = ("L", e)
        if key in self._cache:
            return self._cache[key]
        cx = self.cx
        edge = cx.edges[e]
        ref = edge.ref
        ne = self.n_edge(e)
        rows, cols, vals = [], [], []
        for i in range(ne + 1):
            rows.append(self.side_index(ref, ref.patch, i))
            cols.append(i)
            vals.append(1.0)
        if edge.minus is not None and edge.plus is not None:
            km, kp = edge.minus.patch, edge.plus.patch
            E = expansion_matrix(cx.patches[km].space, cx.patches[kp].space, bool(edge.flip))
            for i in range(ne + 1):
                for j in np.nonzero(E[:, i])[0]:
                    rows.append(self.side_index(edge.plus, kp, j))
                    cols.append(i)
                    vals.append(E[j, i])
        L = sp.csr_matrix((vals, (rows, cols)), shape=(self.N, ne + 1))
        self._cache[key] = L
        return L

    def edge_vertex_function(self, e, v):
        return self.edge_functions(e)[:, self.i_edge_vertex(e, v)]

    def vertex_function(self, v):
        key = ("Lv", v)
        if key in self._cache:
            return self._cache[key]
        vert = self.cx.vertices[v]
        col = sp.csr_matrix((self.N, 1))
        for e in vert.edges:
            col = col + self.edge_vertex_function(e, v)
        for vp in vert.patches:
            col = col - self._unit(self.corner_index(v, vp.patch))
        col = sp.csr_matrix(col)
        col.eliminate_zeros()
        self._cache[key] = col
        return col

    def _unit(self, g):
        return sp.csr_matrix(([1.0], ([g], [0])), shape=(self.N, 1))

    def _restrict(self, col, k):
        """Rows of a column vector belonging to patch k."""
        b = self.lay.block(k)
        mask = np.zeros(self.N)
        mask[b] = 1.0
        return sp.diags(mask) @ col

    def _diag(self, idx):
        idx = np.unique(np.asarray(idx, dtype=int))
        return sp.csr_matrix((np.ones(idx.size), (idx, idx)), shape=(self.N, self.N))

    def _outer(self, col, g):
        """Matrix mapping the coefficient g onto the column col."""
        col = sp.csc_matrix(col)
        r = sp.csr_matrix(([1.0], ([0], [g])), shape=(1, self.N))
        return sp.csr_matrix(col @ r)

    def _has_minus(self, e):
        return self.cx.edges[e].minus is not None

    def _has_star(self, v):
        return self.cx.vertices[v].kstar is not None

    def edge_indices(self, e, k):
        side = self.cx.edges[e].side_of(k)
        n = self.cx.patches[k].n
        return [self.side_index(side, k, j) for j in range(n + 1)]

    def projector(self, kind, target):
        key = (kind, target)
        if key in self._cache:
            return self._cache[key]
        M = self._build(kind, target)
        M = sp.csr_matrix(M)
        M.eliminate_zeros()
        self._cache[key] = M
        return M

    def _build(self, kind, g):
        cx = self.cx
        Z = sp.csr_matrix((self.N, self.N))
        if kind == "Ik0":
            k = g
            n = cx.patches[k].n
            return self._diag([self.gidx(k, a, b) for b in range(1, n) for a in range(1, n)])
        if kind == "Ie":
            return self._diag([i for k in cx.edges[g].patches for i in self.edge_indices(g, k)])
        if kind == "Pe":
            edge = cx.edges[g]
            if edge.minus is None:
                return Z
            L = self.edge_functions(g)
            km = edge.minus.patch
            src = [self.side_index(edge.minus, km, j) for j in range(L.shape[1])]
            R = sp.csr_matrix((np.ones(len(src)), (np.arange(len(src)), src)),
                              shape=(L.shape[1], self.N))
            return L @ R
        if kind == "Ie0":
            M = self.projector("Ie", g)
            for v in set(cx.edges[g].vertices):
                M = M - self.projector("Iev", (g, v))
            return M
        if kind == "Pe0":
            M = self.projector("Pe", g)
            for v in set(cx.edges[g].vertices):
                M = M - self.projector("Pev", (g, v))
            return M
        if kind == "Iv":
            return self._diag([self.corner_index(g, vp.patch) for vp in cx.vertices[g].patches])
        if kind == "Pv":
            if not self._has_star(g):
                return Z
            return self._outer(self.vertex_function(g), self.corner_index(g, cx.vertices[g].kstar))
        if kind == "IbarV":
            Lv = self.vertex_function(g)
            M = Z
            for vp in cx.vertices[g].patches:
                M = M + self._outer(self._restrict(Lv, vp.patch), self.corner_index(g, vp.patch))
            return M
        e, v = g
        self.i_edge_vertex(e, v)
        edge = cx.edges[e]
        if kind == "Iev":
            return self._diag([self.corner_index(v, k) for k in edge.patches])
        if kind == "Pev":
            if edge.minus is None:
                return Z
            return self._outer(self.edge_vertex_function(e, v), self.corner_index(v, edge.minus.patch))
        if kind == "IbarEv":
            L = self.edge_vertex_function(e, v)
            M = Z
            for k in edge.patches:
                M = M + self._outer(self._restrict(L, k), self.corner_index(v, k))
            return M
        raise InvalidTarget(f"unknown projector kind {kind!r}")

    @cached_property
    def basis(self):
        """Conforming basis entries and the sparse embedding V^0_h -> V^0_pw."""
        cx = self.cx
        entries, cols = [], []
        for p in cx.patches:
            n = p.n
            for b in range(1, n):
                for a in range(1, n):
                    entries.append(BasisEntry("interior", p.id, (a, b)))
                    cols.append(self._unit(self.gidx(p.id, a, b)))
        for e in cx.edges:
            if cx.homogeneous and e.boundary:
                continue
            L = self.edge_functions(e.id)
            for i in range(1, L.shape[1] - 1):
                entries.append(BasisEntry("edge", e.id, (i,)))
                cols.append(L[:, i])
        for v in cx.vertices:
            if cx.homogeneous and v.boundary:
                continue
            entries.append(BasisEntry("vertex", v.id))
            cols.append(self.vertex_function(v.id))
        return entries, sp.hstack(cols, format="csr")

    @cached_property
    def P(self):
        cx = self.cx
        M = sp.csr_matrix((self.N, self.N))
        for p in cx.patches:
            M = M + self.projector("Ik0", p.id)
        for e in cx.edges:
            M = M + self.projector("Pe0", e.id)
        for v in cx.vertices:
            M = M + self.projector("Pv", v.id)
        M = sp.csr_matrix(M)
        M.eliminate_zeros()
        return M


def conforming_layer(cx):
    layer = getattr(cx, "_conforming", None)
    if layer is None:
        for v in cx.vertices:
            if v.violations or not v.sequences:
                raise InvalidSequences(f"vertex {v.id}: {'; '.join(v.violations) or 'no sequences'}")
        layer = ConformingLayer(cx)
        cx._conforming = layer
    return layer


def conforming_basis(cx):
    return conforming_layer(cx).basis


def local_projector(cx, kind, target):
    """Sparse matrix of one of the eleven local projectors on broken 0-form coefficients."""
    if kind not in KINDS:
        raise InvalidTarget(f"unknown projector kind {kind!r}")
    layer = conforming_layer(cx)
    try:
        if kind == "Ik0":
            cx.patches[target]
        elif kind in ("Iv", "Pv", "IbarV"):
            cx.vertices[target]
        elif kind in ("Iev", "Pev", "IbarEv"):
            e, v = target
            cx.edges[e], cx.vertices[v]
        else:
            cx.edges[target]
    except (IndexError, TypeError, ValueError) as exc:
        raise InvalidTarget(f"{kind} has no target {target!r}") from exc
    return layer.projector(kind, target)


def conforming_P(cx, f0, samples=33):
    """Apply the conforming projection and attach the max value jump as a certificate."""
    out = BrokenField.from_vector(cx, 0, conforming_layer(cx).P @ f0.vector)
    out.certificate = conformity_certificate(cx, out, samples)
    return out


def conformity_certificate(cx, f0, samples=33):
    jumps = [value_jump(cx, e.id, f0, samples) for e in cx.edges
             if not e.boundary or cx.homogeneous]
    return {"max_jump": max(jumps, default=0.0)}


# Domain extensions.  A region is a dict patch -> ((a1, b1), (a2, b2)) of closed
# logical boxes; extensions are patch-wise hulls of such boxes.

def _hull(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return tuple((min(x[0], y[0]), max(x[1], y[1])) for x, y in zip(a, b))


def _meets(a, b, tol=1e-12):
    if a is None or b is None:
        return False
    return all(x[0] <= y[1] + tol and y[0] <= x[1] + tol for x, y in zip(a, b))


def _add(region, k, box):
    out = dict(region)
    out[k] = _hull(out.get(k), box)
    return out


def _edge_box(side, par, perp):
    return side.to_logical(par, perp)


def _split(side, box):
    """(parallel interval, perpendicular interval) of a logical box."""
    return side.from_logical(box[0], box[1])


def _first_layer(space, e_perp):
    b = space.breakpoints
    return (0.0, float(b[1])) if e_perp == 0 else (float(b[-2]), 1.0)


def _touches(side, box, tol=1e-12):
    lo, hi = _split(side, box)[1]
    return lo - tol <= side.e_perp <= hi + tol


def _map_interval(edge, k, iv):
    """Parallel interval on patch k expressed in the edge parameter t, or back."""
    if edge.flip and edge.ref.patch != k:
        return (1.0 - iv[1], 1.0 - iv[0])
    return iv


def _edge_support(cx, e, i):
    """Per-patch boxes of the edge-continuous function i of edge e."""
    edge = cx.edges[e]
    ref = edge.ref
    sref = cx.patches[ref.patch].space
    par = sref.support(i)
    out = {}
    for s in edge.sides:
        sp_ = cx.patches[s.patch].space
        out[s.patch] = _edge_box(s, _map_interval(edge, s.patch, par), _first_layer(sp_, s.e_perp))
    return out


def _edge_continuity(cx, e, region):
    """Unify parallel extents (in the edge parameter) of boxes touching edge e."""
    edge = cx.edges[e]
    if edge.boundary:
        return region
    touching = [s for s in edge.sides if s.patch in region and _touches(s, region[s.patch])]
    if not touching:
        return region
    iv = None
    for s in touching:
        p = _map_interval(edge, s.patch, _split(s, region[s.patch])[0])
        iv = p if iv is None else (min(iv[0], p[0]), max(iv[1], p[1]))
    out = dict(region)
    for s in edge.sides:
        par = _map_interval(edge, s.patch, iv)
        sp_ = cx.patches[s.patch].space
        if s.patch in out and _touches(s, out[s.patch]):
            perp = _split(s, out[s.patch])[1]
        else:
            perp = _first_layer(sp_, s.e_perp)
        out[s.patch] = _hull(out.get(s.patch), _edge_box(s, par, perp))
    return out


def _patch_hulls(cx, region):
    out = {}
    for k, box in region.items():
        _, hull = extension_index_set(cx.patches[k].spaces, box)
        if hull is not None:
            out[k] = hull
    return out


def _vertex_support(cx, v):
    """Per-patch boxes of S^v: corner supports and the edge-vertex function supports."""
    layer = conforming_layer(cx)
    vert = cx.vertices[v]
    out = {}
    for vp in vert.patches:
        sp_ = cx.patches[vp.patch].space
        box = (_first_layer(sp_, vp.corner[0]), _first_layer(sp_, vp.corner[1]))
        out = _add(out, vp.patch, box)
    for e in vert.edges:
        for k, box in _edge_support(cx, e, layer.i_edge_vertex(e, v)).items():
            out = _add(out, k, box)
    return out


def _close(cx, region, edges):
    for _ in range(3):
        for e in edges:
            region = _edge_continuity(cx, e, region)
    return region


def extend_patch(cx, k, region):
    return _patch_hulls(cx, {k: region[k]}) if k in region else {}


def extend_edge(cx, e, region):
    """Smallest patch-wise Cartesian, edge-continuous superset of the required supports."""
    edge = cx.edges[e]
    out = _patch_hulls(cx, {k: b for k, b in region.items() if k in edge.patches})
    L = conforming_layer(cx).edge_functions(e)
    for i in range(L.shape[1]):
        sup = _edge_support(cx, e, i)
        if any(_meets(sup[k], region.get(k)) for k in sup):
            for k, box in sup.items():
                out = _add(out, k, box)
    return _close(cx, out, [e])


def extend_vertex(cx, v, region):
    vert = cx.vertices[v]
    out = _patch_hulls(cx, {k: b for k, b in region.items() if k in vert.patch_ids})
    for k, box in _vertex_support(cx, v).items():
        out = _add(out, k, box)
    return _close(cx, out, vert.edges)


def extension_domain(cx, kind, target, region):
    """Extension E_g(region) for g a patch, edge or vertex; boxes are logical per patch."""
    if kind in ("patch", "Patch"):
        allowed = {target}
    elif kind in ("edge", "Edge"):
        allowed = set(cx.edges[target].patches)
    elif kind in ("vertex", "Vertex"):
        allowed = set(cx.vertices[target].patch_ids)
    else:
        raise InvalidTarget(f"unknown extension kind {kind!r}")
    region = {k: b for k, b in region.items() if b is not None}
    bad = set(region) - allowed
    if bad:
        raise RegionOutsideNeighborhood(f"region touches patches {sorted(bad)} outside the neighborhood")
    for k, ((a1, b1), (a2, b2)) in region.items():
        if min(a1, a2) < -1e-12 or max(b1, b2) > 1 + 1e-12:
            raise RegionOutsideNeighborhood(f"box on patch {k} leaves the unit square")
    if kind in ("patch", "Patch"):
        return extend_patch(cx, target, region)
    if kind in ("edge", "Edge"):
        return extend_edge(cx, target, region)
    return extend_vertex(cx, target, region)


def neighborhood(cx, region, times=1):
    """Union of every patch, edge and vertex extension that the region can reach."""
    for _ in range(times):
        out = _patch_hulls(cx, region)
        for e in cx.edges:
            sub = {k: b for k, b in region.items() if k in e.patches}
            if not sub:
                continue
            layer = {s.patch: _edge_box(s, (0.0, 1.0), _first_layer(cx.patches[s.patch].space, s.e_perp))
                     for s in e.sides}
            if not any(_meets(layer[k], sub.get(k)) for k in layer):
                continue
            for k, box in extend_edge(cx, e.id, sub).items():
                out = _add(out, k, box)
        for v in cx.vertices:
            sv = _vertex_support(cx, v.id)
            if any(_meets(sv[k], region.get(k)) for k in sv):
                for k, box in extend_vertex(cx, v.id, {k: b for k, b in region.items()
                                                       if k in v.patch_ids}).items():
                    out = _add(out, k, box)
        region = _close(cx, out, [e.id for e in cx.edges])
    return region
