"""Broken (patch-wise) spaces, their projections, derivatives and interface jumps."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch
from .geometry import pullback, pushforward
from .logical import project0_logical, project1_logical, project2_logical
from .topology import CURL_DIV


@dataclass(frozen=True)
class DofLayout:
    ell: int
    sizes: tuple

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)

    @property
    def total(self):
        return int(sum(self.sizes))

    def block(self, k):
        o = self.offsets
        return slice(int(o[k]), int(o[k + 1]))


def layout(cx, ell):
    return DofLayout(ell, tuple(p.spaces.dims[ell] for p in cx.patches))


@dataclass
class BrokenField:
    ell: int
    arrays: list
    certificate: dict = field(default_factory=dict)

    @property
    def vector(self):
        return np.concatenate([np.asarray(a, dtype=float) for a in self.arrays])

    @classmethod
    def from_vector(cls, cx, ell, vec, **kw):
        lay = layout(cx, ell)
        vec = np.asarray(vec, dtype=float)
        if vec.size != lay.total:
            raise DimensionMismatch(f"expected {lay.total} coefficients, got {vec.size}")
        return cls(ell, [vec[lay.block(k)].copy() for k in range(len(cx.patches))], **kw)

    def header(self):
        return {"ell": self.ell, "sizes": [int(np.size(a)) for a in self.arrays],
                "certificate": self.certificate}

    def dump(self, stem):
        """Write a JSON layout header and a raw float64 payload."""
        with open(f"{stem}.json", "w") as fh:
            json.dump(self.header(), fh)
        self.vector.astype("<f8").tofile(f"{stem}.bin")

    @classmethod
    def load(cls, stem):
        with open(f"{stem}.json") as fh:
            h = json.load(fh)
        vec = np.fromfile(f"{stem}.bin", dtype="<f8")
        o = np.concatenate([[0], np.cumsum(h["sizes"])]).astype(int)
        return cls(h["ell"], [vec[o[k]:o[k + 1]] for k in range(len(h["sizes"]))],
                   h.get("certificate", {}))


def _check(cx, f, ell):
    if f.ell != ell or [np.size(a) for a in f.arrays] != list(layout(cx, ell).sizes):
        raise DimensionMismatch(f"field does not match the {ell}-form layout")


def block_diag(blocks):
    return sp.block_diag(blocks, format="csr")


def _star(cx, ell):
    return ell == 1 and cx.sequence_kind == CURL_DIV


def logical_fields(cx, ell, f, logical=False):
    """Per-patch logical evaluators of a physical field (or pass-through when logical)."""
    if logical:
        return f if isinstance(f, (list, tuple)) else [f] * len(cx.patches)
    return [pullback(ell, p.mapping, f, star=_star(cx, ell)) for p in cx.patches]


def unrotate_field(g):
    """Field R^-1 g with R^-1(a, b) = (-b, a)."""
    def h(x1, x2):
        a, b = g(x1, x2)
        return -np.asarray(b), np.asarray(a)
    return h


def to_star(spaces, c):
    """V^1 coefficients (covariant layout) to the rotated V^1* layout."""
    a, b = spaces.split1(c)
    return np.concatenate([b, -a])


def from_star(spaces, c):
    n = spaces.n
    b, a = c[:n * (n + 1)], c[n * (n + 1):]
    return np.concatenate([-a, b])


def project_pw(cx, ell, f, q=None, logical=False):
    """Patch-wise projection: pullback then the logical projection on each patch.

    In a curl-div complex the 1-form projection is R Pi^1_pw R^-1, so its
    coefficients use the rotated layout (S x S', S' x S).
    """
    fields = logical_fields(cx, ell, f, logical)
    if _star(cx, ell):
        return BrokenField(1, [to_star(p.spaces, project1_logical(p.spaces, unrotate_field(g), q))
                               for p, g in zip(cx.patches, fields)])
    proj = (project0_logical, project1_logical, project2_logical)[ell]
    return BrokenField(ell, [proj(p.spaces, g, q) for p, g in zip(cx.patches, fields)])


def _cached(fn):
    """Memoize an operator builder on the complex it is built for."""
    def wrapper(cx, *args):
        store = cx.__dict__.setdefault("_operators", {})
        key = (fn.__name__,) + args
        if key not in store:
            store[key] = fn(cx, *args)
        return store[key]
    wrapper.__name__, wrapper.__doc__ = fn.__name__, fn.__doc__
    return wrapper


@_cached
def grad_matrix(cx):
    return block_diag([p.spaces.grad for p in cx.patches])


@_cached
def curl_matrix(cx):
    return block_diag([p.spaces.curl for p in cx.patches])


def star_matrix(spaces):
    """Sparse map from V^1 coefficients to rotated V^1* coefficients."""
    m = spaces.n * (spaces.n + 1)
    I = sp.identity(m, format="csr")
    Z = sp.csr_matrix((m, m))
    return sp.bmat([[Z, I], [-I, Z]], format="csr")


@_cached
def rot_grad_matrix(cx):
    """Broken rotated gradient V^0 -> V^1*: the gradient followed by R."""
    return block_diag([star_matrix(p.spaces) @ p.spaces.grad for p in cx.patches])


@_cached
def div_matrix(cx):
    """Broken divergence V^1* -> V^2; it equals curl composed with R^-1."""
    return block_diag([p.spaces.curl @ star_matrix(p.spaces).T for p in cx.patches])


def grad_pw(cx, f0):
    _check(cx, f0, 0)
    return BrokenField(1, [p.spaces.grad @ a for p, a in zip(cx.patches, f0.arrays)])


def curl_pw(cx, f1):
    _check(cx, f1, 1)
    return BrokenField(2, [p.spaces.curl @ a for p, a in zip(cx.patches, f1.arrays)])


def axis_grad_block(spaces, axis):
    """Logical partial derivative along axis placed in the V^1 block layout."""
    n = spaces.n
    z = sp.csr_matrix((n * (n + 1), (n + 1) ** 2))
    return sp.vstack([spaces.d1, z] if axis == 0 else [z, spaces.d2], format="csr")


@_cached
def patch_grad_matrix(cx, k, axis):
    """Broken directional gradient along a logical axis, restricted to patch k."""
    blocks = []
    for p in cx.patches:
        if p.id == k:
            blocks.append(axis_grad_block(p.spaces, axis))
        else:
            n0, n1 = p.spaces.dims[0], p.spaces.dims[1]
            blocks.append(sp.csr_matrix((n1, n0)))
    return block_diag(blocks)


@_cached
def edge_grad_matrix(cx, e, d):
    """Broken gradient along the parallel or perpendicular direction of edge e."""
    edge = cx.edges[e]
    sides = {s.patch: s for s in edge.sides}
    blocks = []
    for p in cx.patches:
        s = sides.get(p.id)
        if s is None:
            blocks.append(sp.csr_matrix((p.spaces.dims[1], p.spaces.dims[0])))
        else:
            axis = s.par_axis if d in ("par", "parallel") else s.perp_axis
            blocks.append(axis_grad_block(p.spaces, axis))
    return block_diag(blocks)


@_cached
def mixed_deriv_matrix(cx, e):
    edge = cx.edges[e]
    sides = {s.patch: s for s in edge.sides}
    blocks = []
    for p in cx.patches:
        s = sides.get(p.id)
        if s is None:
            blocks.append(sp.csr_matrix((p.spaces.dims[2], p.spaces.dims[0])))
        else:
            blocks.append(s.det * p.spaces.d12)
    return block_diag(blocks)


def dir_grad_edge(cx, e, d, f0):
    _check(cx, f0, 0)
    return BrokenField.from_vector(cx, 1, edge_grad_matrix(cx, e, d) @ f0.vector)


def mixed_deriv_edge(cx, e, f0):
    _check(cx, f0, 0)
    return BrokenField.from_vector(cx, 2, mixed_deriv_matrix(cx, e) @ f0.vector)


def eval_logical(cx, f, k, x1, x2):
    """Logical values of a broken field on patch k (a tuple for 1-forms)."""
    S = cx.patches[k].spaces
    a = f.arrays[k]
    if _star(cx, f.ell):
        h = len(a) // 2
        return (S.eval_tensor(S.space, S.dspace, a[:h], x1, x2),
                S.eval_tensor(S.dspace, S.space, a[h:], x1, x2))
    return (S.eval0, S.eval1, S.eval2)[f.ell](a, x1, x2)


def eval_physical(cx, f, k, x1, x2):
    g = lambda y1, y2: eval_logical(cx, f, k, y1, y2)
    return pushforward(f.ell, cx.patches[k].mapping, g, star=_star(cx, f.ell))(x1, x2)


def chebyshev(m):
    return 0.5 - 0.5 * np.cos(np.pi * (np.arange(m) + 0.5) / m)


def edge_points(cx, e, k, t):
    """Logical coordinates on patch k of the edge points with parameter t."""
    edge = cx.edges[e]
    s = edge.side_of(k)
    z = edge.eta(k, t)
    return s.to_logical(z, np.full_like(z, float(s.e_perp)))


def value_jump(cx, e, f0, samples=33):
    edge = cx.edges[e]
    t = chebyshev(samples)
    vals = [eval_logical(cx, f0, s.patch, *edge_points(cx, e, s.patch, t)) for s in edge.sides]
    if edge.boundary:
        return float(np.abs(vals[0]).max())
    return float(np.abs(vals[0] - vals[1]).max())


def tangential_jump(cx, e, f1, samples=33):
    """Max over samples of the logical tangential jump (or trace, on boundary edges)."""
    if f1.ell != 1:
        raise DimensionMismatch("tangential jump needs a 1-form")
    edge = cx.edges[e]
    t = chebyshev(samples)
    vals = []
    for s in edge.sides:
        u = eval_logical(cx, f1, s.patch, *edge_points(cx, e, s.patch, t))
        sign = -1.0 if (edge.flip and s is not edge.ref) else 1.0
        vals.append(sign * u[s.par_axis])
    if edge.boundary:
        return float(np.abs(vals[0]).max())
    return float(np.abs(vals[0] - vals[1]).max())


def normal_jump(cx, e, f1, samples=33):
    """Flux jump of a contravariant 1-form across e (used by the curl-div sequence)."""
    edge = cx.edges[e]
    t = chebyshev(samples)
    vals = []
    for s in edge.sides:
        u = eval_logical(cx, f1, s.patch, *edge_points(cx, e, s.patch, t))
        outward = 1.0 if s.e_perp == 1 else -1.0
        vals.append(outward * u[s.perp_axis])
    if edge.boundary:
        return float(np.abs(vals[0]).max())
    return float(np.abs(vals[0] + vals[1]).max())
