"""Path and surface antiderivatives of 1- and 2-form data.

Curves and surfaces live in a chart: a plane glued from unit squares, one per
patch, each sent to the logical square of its patch by a signed axis
permutation.  Edge charts use (t, s) with t the edge parameter and |s| the
logical distance to the edge (s < 0 on the coarse side).  Vertex charts use
(A, B) with |A|, |B| the logical distances to the two edges of the patch at
the vertex; the central edges sit on B = 0 and the starting edges on A = 0.

Every integration curve is an axis-aligned polyline in a chart, and every
integration surface is the region enclosed by a closed polyline.  Enclosed
regions are split into signed strips (one per segment moving along B), so a
surface integral reduces to box integrals of the pulled-back density.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSequences, SurfaceDecompositionFailed
from .geometry import pullback
from .logical import prefix_rule
from .univariate import gauss_on

TOL = 1e-12
COARSE = "coarse"
FINE = "fine"


# Batched integrals of logical fields.

class FieldIntegrals:
    """Line integrals of a 1-form or box integrals of a 2-form, per patch.

    ``fields[k]`` is the logical (pulled-back) field on patch k.  Every
    integral splits at the patch breakpoints and uses q Gauss points per cell,
    so spline data is integrated exactly for q large enough.
    """

    def __init__(self, cx, fields, q=None):
        self.cx = cx
        self.fields = list(fields)
        self.q = q

    def _q(self, k):
        return self.q or self.cx.patches[k].space.degree + 3

    def _breaks(self, k):
        return self.cx.patches[k].space.breakpoints

    def _comp(self, k, axis, X1, X2):
        v = self.fields[k](X1, X2)
        if isinstance(v, tuple):
            v = v[axis]
        return np.broadcast_to(np.asarray(v, dtype=float), np.broadcast(X1, X2).shape)

    def prefix(self, k, axis, y, c):
        """int_0^y of component `axis` along logical axis `axis` at fixed other coordinate c."""
        y, c = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(c, dtype=float))
        shape = y.shape
        y, c = y.ravel(), c.ravel()
        if y.size == 0:
            return np.zeros(shape)
        br = self._breaks(k)
        q = self._q(k)
        nc = len(br) - 1
        cu, inv = np.unique(c, return_inverse=True)
        zf, wf = gauss_on(br[:-1], br[1:], q)
        Z = np.repeat(zf.ravel()[:, None], cu.size, axis=1)
        C = np.repeat(cu[None, :], zf.size, axis=0)
        vals = self._comp(k, axis, Z, C) if axis == 0 else self._comp(k, axis, C, Z)
        cell = (wf.ravel()[:, None] * vals).reshape(nc, q, cu.size).sum(axis=1)
        cum = np.vstack([np.zeros((1, cu.size)), np.cumsum(cell, axis=0)])
        idx = np.clip(np.searchsorted(br, y, side="right") - 1, 0, nc - 1)
        zp, wp = gauss_on(br[idx], y, q)
        cp = np.repeat(c[:, None], q, axis=1)
        part = self._comp(k, axis, zp, cp) if axis == 0 else self._comp(k, axis, cp, zp)
        return (cum[idx, inv] + np.sum(wp * part, axis=1)).reshape(shape)

    def line(self, k, axis, c, y0, y1):
        """int_{y0}^{y1} along logical axis `axis` at fixed other coordinate c."""
        y0, y1, c = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (y0, y1, c)))
        both = self.prefix(k, axis, np.concatenate([y1.ravel(), y0.ravel()]),
                           np.concatenate([c.ravel(), c.ravel()]))
        m = y0.size
        return (both[:m] - both[m:]).reshape(y0.shape)

    def corner(self, k, y1, y2):
        """G(y1, y2) = int_0^y1 int_0^y2 of the density on patch k."""
        y1, y2 = np.broadcast_arrays(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))
        shape = y1.shape
        if y1.size == 0:
            return np.zeros(shape)
        u1, i1 = np.unique(y1.ravel(), return_inverse=True)
        u2, i2 = np.unique(y2.ravel(), return_inverse=True)
        br, q = self._breaks(k), self._q(k)
        Z1, W1 = prefix_rule(br, u1, q)
        Z2, W2 = prefix_rule(br, u2, q)
        X1, X2 = np.meshgrid(Z1, Z2, indexing="ij")
        F = self._comp(k, 0, X1, X2)
        G = W1 @ F @ W2.T
        return G[i1, i2].reshape(shape)

    def box(self, k, lo1, hi1, lo2, hi2):
        lo1, hi1, lo2, hi2 = np.broadcast_arrays(*(np.asarray(a, dtype=float)
                                                  for a in (lo1, hi1, lo2, hi2)))
        m = lo1.size
        y1 = np.concatenate([hi1.ravel(), lo1.ravel(), hi1.ravel(), lo1.ravel()])
        y2 = np.concatenate([hi2.ravel(), hi2.ravel(), lo2.ravel(), lo2.ravel()])
        G = self.corner(k, y1, y2)
        return (G[:m] - G[m:2 * m] - G[2 * m:3 * m] + G[3 * m:]).reshape(lo1.shape)


def integrals(cx, ell, f, q=None, logical=False):
    """FieldIntegrals of a physical field (covariant pullback) or of logical fields."""
    if isinstance(f, FieldIntegrals):
        return f
    if logical:
        fields = f if isinstance(f, (list, tuple)) else [f] * len(cx.patches)
    else:
        fields = [pullback(ell, p.mapping, f) for p in cx.patches]
    return FieldIntegrals(cx, fields, q)


# Charts.

@dataclass(frozen=True, eq=False)
class Piece:
    patch: int
    origin: np.ndarray
    M: np.ndarray
    box: tuple

    @property
    def orientation(self):
        return 1.0 if np.linalg.det(self.M) > 0 else -1.0

    def to_logical(self, A, B):
        o, M = self.origin, self.M
        return o[0] + M[0, 0] * A + M[0, 1] * B, o[1] + M[1, 0] * A + M[1, 1] * B

    def from_logical(self, x1, x2):
        o, M = self.origin, self.M
        d1, d2 = np.asarray(x1) - o[0], np.asarray(x2) - o[1]
        return M[0, 0] * d1 + M[1, 0] * d2, M[0, 1] * d1 + M[1, 1] * d2

    def contains(self, A, B, tol=1e-10):
        (a0, a1), (b0, b1) = self.box
        return (A >= a0 - tol) & (A <= a1 + tol) & (B >= b0 - tol) & (B <= b1 + tol)

    def logical_axis(self, j):
        """Logical axis moved by the chart axis j."""
        return int(np.argmax(np.abs(self.M[:, j])))


@dataclass(frozen=True, eq=False)
class Chart:
    pieces: tuple

    def piece(self, k):
        for p in self.pieces:
            if p.patch == k:
                return p
        raise KeyError(k)

    @property
    def a_min(self):
        return min(p.box[0][0] for p in self.pieces)

    def locate(self, A, B):
        out = np.full(np.shape(A), -1, dtype=int)
        for i, p in enumerate(self.pieces):
            out = np.where((out < 0) & p.contains(A, B), i, out)
        return out


@dataclass(frozen=True)
class CurvePlan:
    """Open polylines (m, nv, 2) in a chart, one per evaluation point."""
    chart: Chart
    points: np.ndarray

    def physical(self, cx):
        """Physical vertices of each polyline, via the piece holding each vertex."""
        P = self.points
        out = np.empty_like(P)
        idx = self.chart.locate(P[..., 0], P[..., 1])
        if np.any(idx < 0):
            raise SurfaceDecompositionFailed("curve leaves the chart")
        for i, pc in enumerate(self.chart.pieces):
            m = idx == i
            x1, x2 = pc.to_logical(P[..., 0][m], P[..., 1][m])
            X, Y = cx.patches[pc.patch].mapping(x1, x2)
            out[..., 0][m], out[..., 1][m] = X, Y
        return out


@dataclass(frozen=True)
class SurfacePlan:
    """Closed polylines (m, nv, 2) in a chart; the surface is the enclosed region."""
    chart: Chart
    loops: np.ndarray

    def strips(self):
        """Signed strips (owner, a0, a1, b0, b1, sign) whose sum is the winding number."""
        L = self.loops
        P, Q = L, np.roll(L, -1, axis=1)
        vert = (np.abs(P[..., 0] - Q[..., 0]) <= TOL) & (np.abs(P[..., 1] - Q[..., 1]) > TOL)
        own, seg = np.nonzero(vert)
        c = P[own, seg, 0]
        b0, b1 = P[own, seg, 1], Q[own, seg, 1]
        sgn = np.sign(b1 - b0)
        a0 = np.full_like(c, self.chart.a_min)
        return own, a0, c, np.minimum(b0, b1), np.maximum(b0, b1), sgn

    def boxes(self):
        """Per piece: (owner, logical lo1, hi1, lo2, hi2, signed weight)."""
        own, a0, a1, b0, b1, sgn = self.strips()
        out = []
        for pc in self.chart.pieces:
            (pa0, pa1), (pb0, pb1) = pc.box
            lo_a, hi_a = np.maximum(a0, pa0), np.minimum(a1, pa1)
            lo_b, hi_b = np.maximum(b0, pb0), np.minimum(b1, pb1)
            ok = (hi_a - lo_a > TOL) & (hi_b - lo_b > TOL)
            if not ok.any():
                continue
            x1a, x2a = pc.to_logical(lo_a[ok], lo_b[ok])
            x1b, x2b = pc.to_logical(hi_a[ok], hi_b[ok])
            out.append((pc, own[ok], np.minimum(x1a, x1b), np.maximum(x1a, x1b),
                        np.minimum(x2a, x2b), np.maximum(x2a, x2b), sgn[ok] * pc.orientation))
        return out


def integrate_curves(fi, plan):
    """Path integrals of a 1-form along each polyline of a CurvePlan."""
    P = plan.points
    m = P.shape[0]
    total = np.zeros(m)
    for j in range(P.shape[1] - 1):
        total += integrate_segments(fi, plan.chart, P[:, j], P[:, j + 1])
    return total


def integrate_segments(fi, chart, P, Q):
    """Path integrals along axis-aligned chart segments P -> Q, split where they cross 0."""
    m = P.shape[0]
    out = np.zeros(m)
    moving = np.where(np.abs(P[:, 0] - Q[:, 0]) > TOL, 0, 1)
    length = np.abs(P - Q).max(axis=1)
    j = moving
    pj, qj = P[np.arange(m), j], Q[np.arange(m), j]
    cross = (pj * qj < 0) & (length > TOL)
    Z = P.copy()
    Z[np.arange(m), j] = np.where(cross, 0.0, qj)
    subs = [(P, Z), (Z, Q)]
    for S, T in subs:
        mid = 0.5 * (S + T)
        ok = np.abs(S - T).max(axis=1) > TOL
        if not ok.any():
            continue
        loc = chart.locate(mid[:, 0], mid[:, 1])
        if np.any(loc[ok] < 0):
            raise SurfaceDecompositionFailed("integration curve leaves the chart")
        for i, pc in enumerate(chart.pieces):
            for jj in (0, 1):
                sel = ok & (loc == i) & (j == jj)
                if not sel.any():
                    continue
                d = pc.logical_axis(jj)
                s1, s2 = pc.to_logical(S[sel, 0], S[sel, 1])
                t1, t2 = pc.to_logical(T[sel, 0], T[sel, 1])
                s, t = (s1, s2), (t1, t2)
                out[sel] += fi.line(pc.patch, d, s[1 - d], s[d], t[d])
    return out


def integrate_surfaces(fi, plan):
    """Signed integrals of a 2-form density over each enclosed region of a SurfacePlan."""
    total = np.zeros(plan.loops.shape[0])
    for pc, own, lo1, hi1, lo2, hi2, w in plan.boxes():
        np.add.at(total, own, w * fi.box(pc.patch, lo1, hi1, lo2, hi2))
    return total


def average_nodes(n_avg):
    """Gauss nodes on [0, 1] with weights summing to one."""
    x, w = gauss_on(0.0, 1.0, n_avg)
    return x.ravel(), w.ravel()


def default_n_avg(cx):
    return max(p.space.degree for p in cx.patches) + 3


# Edge charts and edge curves.

def edge_chart(cx, e):
    edge = cx.edges[e]
    pieces = []
    for s in edge.sides:
        sB = -1.0 if (edge.minus is not None and s is edge.minus) else 1.0
        flip = bool(edge.flip and s is not edge.ref)
        b_par, m_par = (1.0, -1.0) if flip else (0.0, 1.0)
        ep = float(s.e_perp)
        b_perp, m_perp = ep, (1.0 - 2.0 * ep) * sB
        if s.perp_axis == 1:
            o, M = (b_par, b_perp), [[m_par, 0.0], [0.0, m_perp]]
        else:
            o, M = (b_perp, b_par), [[0.0, m_perp], [m_par, 0.0]]
        box = ((0.0, 1.0), (-1.0, 0.0) if sB < 0 else (0.0, 1.0))
        pieces.append(Piece(s.patch, np.array(o), np.array(M), box))
    return Chart(tuple(pieces))


def _edge_coords(cx, e, k, x1, x2):
    return edge_chart(cx, e).piece(k).from_logical(x1, x2)


def _stack(*pts):
    return np.stack([np.stack(np.broadcast_arrays(*p), axis=-1) for p in pts], axis=1)


def edge_parallel_plan(cx, e, k, x1, x2):
    chart = edge_chart(cx, e)
    t, s = chart.piece(k).from_logical(np.ravel(x1), np.ravel(x2))
    return CurvePlan(chart, _stack((0.0 * t, s), (t, s)))


def edge_perp_plan(cx, e, k, x1, x2, a):
    """Curves from the common start (or the foot on a homogeneous boundary edge) to x."""
    chart = edge_chart(cx, e)
    t, s = chart.piece(k).from_logical(np.ravel(x1), np.ravel(x2))
    a = np.broadcast_to(np.asarray(a, dtype=float), t.shape)
    if cx.edges[e].minus is None:
        return CurvePlan(chart, _stack((t, 0.0 * t), (t, s)))
    return CurvePlan(chart, _stack((0.0 * t, -a), (t, -a), (t, s)))


def edge_closing_plan(cx, e, k, x1, x2, a):
    """Closing curve from the parallel start to the perpendicular start along patch sides."""
    chart = edge_chart(cx, e)
    t, s = chart.piece(k).from_logical(np.ravel(x1), np.ravel(x2))
    a = np.broadcast_to(np.asarray(a, dtype=float), t.shape)
    z = 0.0 * t
    if cx.edges[e].minus is None:
        return CurvePlan(chart, _stack((z, s), (z, z), (t, z)))
    return CurvePlan(chart, _stack((z, s), (z, -a), (z, -a)))


def edge_surface_plan(cx, e, k, x1, x2, a):
    """Region bounded by the perpendicular curve, the reversed parallel curve and the closing curve."""
    chart = edge_chart(cx, e)
    t, s = chart.piece(k).from_logical(np.ravel(x1), np.ravel(x2))
    a = np.broadcast_to(np.asarray(a, dtype=float), t.shape)
    z = 0.0 * t
    if cx.edges[e].minus is None:
        return SurfacePlan(chart, _stack((t, z), (t, s), (z, s), (z, z)))
    return SurfacePlan(chart, _stack((z, -a), (t, -a), (t, s), (z, s)))


# Vertex curve rules and vertex charts.

@dataclass(frozen=True)
class PatchCurveRule:
    patch: int
    central_edge: int
    role: str
    start_edge: int | None
    quadrant: tuple


@dataclass(frozen=True)
class VertexCurveRule:
    vertex: int
    rules: tuple
    estar: int | None

    def rule(self, k):
        for r in self.rules:
            if r.patch == k:
                return r
        raise KeyError(k)


def build_vertex_curves(cx, v):
    """Central edge, coarse or fine role and starting edge for every patch around v."""
    vert = cx.vertices[v]
    if vert.violations or not vert.sequences:
        raise InvalidSequences(f"vertex {v}: {'; '.join(vert.violations) or 'no sequences'}")
    rules = []
    for si, seq in enumerate(vert.sequences):
        sA = 1 if si == 0 else -1
        if len(seq) == 2:
            k1, k2 = seq
            e1 = {vert.entry(k1).edge_a, vert.entry(k1).edge_b}
            e2 = {vert.entry(k2).edge_a, vert.entry(k2).edge_b}
            shared = e1 & e2
            if len(shared) != 1:
                raise InvalidSequences(f"vertex {v}: patches {k1}, {k2} do not share one edge")
            e = shared.pop()
            start = (e1 - {e}).pop()
            rules.append(PatchCurveRule(k1, e, COARSE, start, (sA, 1)))
            rules.append(PatchCurveRule(k2, e, FINE, start, (sA, -1)))
        elif len(seq) == 1:
            k = seq[0]
            vp = vert.entry(k)
            own = (vp.edge_a, vp.edge_b)
            if cx.homogeneous:
                bnd = [e for e in vert.edges if e in own and cx.edges[e].boundary]
                if not bnd:
                    raise InvalidSequences(f"vertex {v}: single patch {k} has no boundary edge")
                rules.append(PatchCurveRule(k, bnd[0], FINE, None, (sA, -1)))
            else:
                start = vert.estar
                if start not in own:
                    raise InvalidSequences(f"vertex {v}: starting edge is not an edge of patch {k}")
                central = own[1] if own[0] == start else own[0]
                rules.append(PatchCurveRule(k, central, COARSE, start, (sA, 1)))
        else:
            raise InvalidSequences(f"vertex {v}: sequence of length {len(seq)}")
    return VertexCurveRule(v, tuple(rules), vert.estar)


def vertex_chart(cx, v, rule=None):
    rule = rule or build_vertex_curves(cx, v)
    vert = cx.vertices[v]
    pieces = []
    for r in rule.rules:
        vp = vert.entry(r.patch)
        c1, c2 = vp.corner
        g1, g2 = 1.0 - 2.0 * c1, 1.0 - 2.0 * c2
        sA, sB = r.quadrant
        if r.central_edge == vp.edge_b:
            M = [[g1 * sA, 0.0], [0.0, g2 * sB]]
        else:
            M = [[0.0, g1 * sB], [g2 * sA, 0.0]]
        box = ((0.0, 1.0) if sA > 0 else (-1.0, 0.0), (0.0, 1.0) if sB > 0 else (-1.0, 0.0))
        pieces.append(Piece(r.patch, np.array([float(c1), float(c2)]), np.array(M), box))
    orient = {p.orientation for p in pieces}
    if len(orient) != 1:
        raise SurfaceDecompositionFailed(f"vertex {v}: chart pieces disagree on orientation")
    return Chart(tuple(pieces))


def _vertex_curve_points(rule, k, A, B, a):
    """Chart polyline (m, 3, 2) of the vertex curve ending at (A, B) on patch k."""
    r = rule.rule(k)
    a = np.broadcast_to(np.asarray(a, dtype=float), A.shape)
    if r.start_edge is None:
        return _stack((A, 0.0 * A), (A, 0.0 * A), (A, B))
    return _stack((0.0 * A, a), (A, a), (A, B))


def vertex_plan(cx, v, k, x1, x2, a, rule=None):
    rule = rule or build_vertex_curves(cx, v)
    chart = vertex_chart(cx, v, rule)
    A, B = chart.piece(k).from_logical(np.ravel(x1), np.ravel(x2))
    return CurvePlan(chart, _vertex_curve_points(rule, k, A, B, a))


def _edge_points_in_vertex_chart(cx, e, vchart, echart, k, pts):
    """Map edge-chart polyline vertices to the vertex chart through the pieces holding them."""
    out = np.empty_like(pts)
    loc = echart.locate(pts[..., 0], pts[..., 1])
    own = echart.pieces.index(echart.piece(k))
    # vertices on the edge itself can be mapped through either side; prefer the patch of x
    on_x = echart.piece(k).contains(pts[..., 0], pts[..., 1])
    loc = np.where(on_x, own, loc)
    for i, pc in enumerate(echart.pieces):
        m = loc == i
        x1, x2 = pc.to_logical(pts[..., 0][m], pts[..., 1][m])
        A, B = vchart.piece(pc.patch).from_logical(x1, x2)
        out[..., 0][m], out[..., 1][m] = A, B
    return out


def edge_vertex_closing_points(cx, e, v, k, x1, x2, ae, av, rule=None):
    """Vertex-chart polyline S_v -> O -> C -> S_e along edges of the patches around v."""
    rule = rule or build_vertex_curves(cx, v)
    vchart = vertex_chart(cx, v, rule)
    echart = edge_chart(cx, e)
    x1, x2 = np.ravel(x1), np.ravel(x2)
    A, B = vchart.piece(k).from_logical(x1, x2)
    vpts = _vertex_curve_points(rule, k, A, B, av)
    epts = _edge_points_in_vertex_chart(cx, e, vchart, echart, k,
                                        edge_perp_plan(cx, e, k, x1, x2, ae).points)
    Sv, Se = vpts[:, 0], epts[:, 0]
    O = np.zeros_like(Sv)
    if cx.edges[e].minus is None:
        C = O
    else:
        ref = echart.piece(cx.edges[e].ref.patch)
        c1, c2 = ref.to_logical(0.0, 0.0)
        C = np.broadcast_to(np.array(vchart.piece(ref.patch).from_logical(c1, c2)), Sv.shape)
    return vchart, np.stack([Sv, O, C, Se], axis=1), vpts, epts


def edge_vertex_surface_plan(cx, e, v, k, x1, x2, ae, av, rule=None):
    """Region bounded by the edge curve, the reversed vertex curve and the closing curve."""
    vchart, close, vpts, epts = edge_vertex_closing_points(cx, e, v, k, x1, x2, ae, av, rule)
    loop = np.concatenate([epts, vpts[:, -2::-1], close[:, 1:3]], axis=1)
    return SurfacePlan(vchart, loop)


# Antiderivative evaluators.

class Antiderivative:
    """Lazy logical evaluator: values on patch k at logical points (x1, x2)."""

    def __init__(self, patches, fn, name=""):
        self.patches = tuple(patches)
        self._fn = fn
        self.name = name

    def logical(self, k, x1, x2):
        if k not in self.patches:
            raise KeyError(f"{self.name} is not defined on patch {k}")
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        return np.asarray(self._fn(k, x1.ravel(), x2.ravel()), dtype=float).reshape(x1.shape)

    __call__ = logical

    def on(self, k):
        return lambda X1, X2: self.logical(k, X1, X2)

    def physical(self, k, x1, x2):
        """Alias of logical: a 0-form has the same value in both coordinates."""
        return self.logical(k, x1, x2)


def _averaged(h, n_avg, x1, x2, curve):
    """(1/h) int_0^h curve(x1, x2, a) da by Gauss quadrature.

    All nodes are evaluated in one batch: the points are tiled once per node
    and curve receives one value of a per point.
    """
    s, w = average_nodes(n_avg)
    m = np.size(x1)
    X1, X2 = np.tile(np.ravel(x1), n_avg), np.tile(np.ravel(x2), n_avg)
    vals = np.asarray(curve(X1, X2, np.repeat(h * s, m)), dtype=float).reshape(n_avg, m)
    return w @ vals


def phi_patch(cx, k, d, u, q=None, logical=False):
    fi = integrals(cx, 1, u, q, logical)
    axis = d - 1 if d in (1, 2) else d

    def fn(kk, x1, x2):
        y, c = (x1, x2) if axis == 0 else (x2, x1)
        return fi.line(kk, axis, c, 0.0, y)

    return Antiderivative([k], fn, f"phi_patch[{k},{d}]")


def phi_edge_parallel(cx, e, u, q=None, logical=False):
    fi = integrals(cx, 1, u, q, logical)
    return Antiderivative(cx.edges[e].patches,
                          lambda k, x1, x2: integrate_curves(fi, edge_parallel_plan(cx, e, k, x1, x2)),
                          f"phi_edge_parallel[{e}]")


def phi_edge_perp(cx, e, u, n_avg=None, q=None, logical=False):
    fi = integrals(cx, 1, u, q, logical)
    n_avg = n_avg or default_n_avg(cx)
    h = cx.h_edge(e)

    def fn(k, x1, x2):
        if cx.edges[e].minus is None:
            return integrate_curves(fi, edge_perp_plan(cx, e, k, x1, x2, 0.0))
        return _averaged(h, n_avg, x1, x2,
                         lambda y1, y2, a: integrate_curves(fi, edge_perp_plan(cx, e, k, y1, y2, a)))

    return Antiderivative(cx.edges[e].patches, fn, f"phi_edge_perp[{e}]")


def phi_edge_closing(cx, e, u, n_avg=None, q=None, logical=False):
    """Averaged circulation along the closing curves of the edge surfaces."""
    fi = integrals(cx, 1, u, q, logical)
    n_avg = n_avg or default_n_avg(cx)
    h = cx.h_edge(e)

    def fn(k, x1, x2):
        return _averaged(h, n_avg, x1, x2,
                         lambda y1, y2, a: integrate_curves(fi, edge_closing_plan(cx, e, k, y1, y2, a)))

    return Antiderivative(cx.edges[e].patches, fn, f"phi_edge_closing[{e}]")


def phi_vertex(cx, v, u, n_avg=None, q=None, logical=False):
    fi = integrals(cx, 1, u, q, logical)
    n_avg = n_avg or default_n_avg(cx)
    rule = build_vertex_curves(cx, v)
    h = cx.h_vertex(v)

    def fn(k, x1, x2):
        return _averaged(h, n_avg, x1, x2,
                         lambda y1, y2, a: integrate_curves(fi, vertex_plan(cx, v, k, y1, y2, a, rule)))

    return Antiderivative(cx.vertices[v].patch_ids, fn, f"phi_vertex[{v}]")


def phi_edge_vertex(cx, e, v, d, u, n_avg=None, q=None, logical=False):
    """Edge-vertex antiderivatives: the vertex one along the edge, the edge one across it."""
    if d in ("par", "parallel"):
        return phi_vertex(cx, v, u, n_avg, q, logical)
    return phi_edge_perp(cx, e, u, n_avg, q, logical)


def phi_edge_vertex_closing(cx, e, v, u, n_avg=None, q=None, logical=False):
    """Circulation along the closing curves of the edge-vertex surfaces (averaged)."""
    fi = integrals(cx, 1, u, q, logical)
    n_avg = n_avg or default_n_avg(cx)
    rule = build_vertex_curves(cx, v)
    he, hv = cx.h_edge(e), cx.h_vertex(v)

    def fn(k, x1, x2):
        def at(y1, y2, s):
            ch, close, _, _ = edge_vertex_closing_points(cx, e, v, k, y1, y2, he * s, hv * s, rule)
            return integrate_curves(fi, CurvePlan(ch, close))
        return _averaged(1.0, n_avg, x1, x2, at)

    return Antiderivative(cx.edges[e].patches, fn, f"phi_edge_vertex_closing[{e},{v}]")


def psi_patch(cx, k, f, q=None, logical=False):
    fi = integrals(cx, 2, f, q, logical)
    return Antiderivative([k], lambda kk, x1, x2: fi.corner(kk, x1, x2), f"psi_patch[{k}]")


def psi_edge(cx, e, f, n_avg=None, q=None, logical=False):
    fi = integrals(cx, 2, f, q, logical)
    n_avg = n_avg or default_n_avg(cx)
    h = cx.h_edge(e)

    def fn(k, x1, x2):
        if cx.edges[e].minus is None:
            return integrate_surfaces(fi, edge_surface_plan(cx, e, k, x1, x2, 0.0))
        return _averaged(h, n_avg, x1, x2,
                         lambda y1, y2, a: integrate_surfaces(fi, edge_surface_plan(cx, e, k, y1, y2, a)))

    return Antiderivative(cx.edges[e].patches, fn, f"psi_edge[{e}]")


def psi_edge_vertex(cx, e, v, f, n_avg=None, q=None, logical=False):
    fi = integrals(cx, 2, f, q, logical)
    n_avg = n_avg or default_n_avg(cx)
    rule = build_vertex_curves(cx, v)
    he, hv = cx.h_edge(e), cx.h_vertex(v)

    def fn(k, x1, x2):
        return _averaged(1.0, n_avg, x1, x2, lambda y1, y2, s: integrate_surfaces(
            fi, edge_vertex_surface_plan(cx, e, v, k, y1, y2, he * s, hv * s, rule)))

    return Antiderivative(cx.edges[e].patches, fn, f"psi_edge_vertex[{e},{v}]")
