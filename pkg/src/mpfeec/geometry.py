"""Patch mappings, pushforwards and pullbacks, and physical L^p norms.

All consumers work in logical coordinates: a physical field is only ever
evaluated at x = F(xh), so inverse mappings are never needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateMapping
from .univariate import gauss_on


@dataclass(frozen=True, eq=False)
class PatchMapping:
    kind: str
    F: Callable = field(repr=False)
    DF: Callable = field(repr=False)
    params: dict = field(default_factory=dict)

    def __call__(self, x1, x2):
        return self.F(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))

    def jacobian(self, x1, x2):
        """Array of shape (..., 2, 2) with J[..., i, j] = dF_i / dxh_j."""
        return self.DF(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))

    def det(self, x1, x2):
        return _det(self.jacobian(x1, x2))

    def corners(self):
        c = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        X, Y = self(c[:, 0], c[:, 1])
        return np.stack([X, Y], axis=1)

    def diameter(self, m=9):
        t = np.linspace(0.0, 1.0, m)
        s = np.concatenate([t, np.ones(m), t[::-1], np.zeros(m)])
        r = np.concatenate([np.zeros(m), t, np.ones(m), t[::-1]])
        P = np.stack(self(s, r), axis=1)
        return float(np.max(np.linalg.norm(P[:, None] - P[None], axis=-1)))

    def bounds(self, m=20):
        """Measured (max |DF|/H, max |DF^-1| H) on an m x m grid."""
        t = (np.arange(m) + 0.5) / m
        X1, X2 = np.meshgrid(t, t, indexing="ij")
        J = self.jacobian(X1, X2)
        H = self.diameter()
        k1 = np.linalg.norm(J, ord=2, axis=(-2, -1)).max() / H
        k2 = np.linalg.norm(np.linalg.inv(J), ord=2, axis=(-2, -1)).max() * H
        return float(k1), float(k2)


def _check(mapping, m=20):
    t = np.linspace(0.0, 1.0, m)
    X1, X2 = np.meshgrid(t, t, indexing="ij")
    d = mapping.det(X1, X2)
    if not np.all(np.isfinite(d)) or d.min() <= 1e-12:
        raise DegenerateMapping(f"{mapping.kind} mapping has det DF <= 1e-12 (min {d.min():.3e})")
    return mapping


def _affine(A, b):
    A = np.asarray(A, dtype=float).reshape(2, 2)
    b = np.asarray(b, dtype=float).reshape(2)

    def F(x1, x2):
        return A[0, 0] * x1 + A[0, 1] * x2 + b[0], A[1, 0] * x1 + A[1, 1] * x2 + b[1]

    def DF(x1, x2):
        return np.broadcast_to(A, np.broadcast(x1, x2).shape + (2, 2)).copy()

    return PatchMapping("affine", F, DF, {"A": A.tolist(), "b": b.tolist()})


def _bilinear(corners):
    P = np.asarray(corners, dtype=float).reshape(4, 2)
    p00, p10, p11, p01 = P
    a, bx, by, c = p00, p10 - p00, p01 - p00, p11 - p10 - p01 + p00
    for i in range(4):
        u, v, w = P[i - 1], P[i], P[(i + 1) % 4]
        d1, d2 = v - u, w - v
        if d1[0] * d2[1] - d1[1] * d2[0] <= 0:
            raise DegenerateMapping("bilinear corners must form a convex counterclockwise quad")

    def F(x1, x2):
        return tuple(a[i] + bx[i] * x1 + by[i] * x2 + c[i] * x1 * x2 for i in range(2))

    def DF(x1, x2):
        x1, x2 = np.broadcast_arrays(x1, x2)
        J = np.empty(x1.shape + (2, 2))
        for i in range(2):
            J[..., i, 0] = bx[i] + c[i] * x2
            J[..., i, 1] = by[i] + c[i] * x1
        return J

    return PatchMapping("bilinear", F, DF, {"corners": P.tolist()})


def _annulus(r0, r1, t0, t1):
    if not (0 < r0 < r1) or not (t0 < t1) or t1 - t0 >= np.pi:
        raise DegenerateMapping("annulus sector needs 0 < r0 < r1 and 0 < t1 - t0 < pi")
    dr, dt = r1 - r0, t1 - t0

    def F(x1, x2):
        r = r0 + dr * x1
        t = t0 + dt * x2
        return r * np.cos(t), r * np.sin(t)

    def DF(x1, x2):
        x1, x2 = np.broadcast_arrays(x1, x2)
        r = r0 + dr * x1
        t = t0 + dt * x2
        J = np.empty(x1.shape + (2, 2))
        J[..., 0, 0] = dr * np.cos(t)
        J[..., 1, 0] = dr * np.sin(t)
        J[..., 0, 1] = -r * dt * np.sin(t)
        J[..., 1, 1] = r * dt * np.cos(t)
        return J

    return PatchMapping("annulus-sector", F, DF,
                        {"r0": r0, "r1": r1, "theta0": t0, "theta1": t1})


def builtin_mapping(kind, params=None, **kw):
    """Construct an affine, bilinear, annulus-sector or user mapping."""
    p = dict(params or {}, **kw)
    if kind == "affine":
        m = _affine(p.get("A", np.eye(2)), p.get("b", (0.0, 0.0)))
    elif kind == "bilinear":
        m = _bilinear(p["corners"])
    elif kind in ("annulus-sector", "annulus"):
        m = _annulus(float(p["r0"]), float(p["r1"]), float(p["theta0"]), float(p["theta1"]))
    elif kind == "user":
        m = PatchMapping("user", p["F"], p["DF"], {})
    else:
        raise ValueError(f"unknown mapping kind {kind!r}")
    return _check(m)


def square(x0, y0, hx, hy=None):
    """Axis-aligned rectangle [x0, x0+hx] x [y0, y0+hy]."""
    hy = hx if hy is None else hy
    return builtin_mapping("affine", A=[[hx, 0.0], [0.0, hy]], b=[x0, y0])


def _matvec(M, v):
    return (M[..., 0, 0] * v[0] + M[..., 0, 1] * v[1],
            M[..., 1, 0] * v[0] + M[..., 1, 1] * v[1])


def _det(J):
    return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]


def _inv(J):
    d = _det(J)
    out = np.empty_like(J)
    out[..., 0, 0] = J[..., 1, 1] / d
    out[..., 1, 1] = J[..., 0, 0] / d
    out[..., 0, 1] = -J[..., 0, 1] / d
    out[..., 1, 0] = -J[..., 1, 0] / d
    return out


def _T(J):
    return np.swapaxes(J, -1, -2)


def pushforward(ell, mapping, f, star=False):
    """Physical value at F(xh) of the pushed-forward logical field f, as a function of xh.

    ell=1 uses the covariant transform DF^-T unless star, in which case the
    contravariant transform DF / J is used.  ell=2 divides by J.
    """
    if ell == 0:
        return f
    if ell == 1:
        def g(x1, x2):
            J = mapping.jacobian(x1, x2)
            u = f(x1, x2)
            if star:
                d = _det(J)
                v = _matvec(J, u)
                return v[0] / d, v[1] / d
            return _matvec(_T(_inv(J)), u)
        return g
    if ell == 2:
        return lambda x1, x2: f(x1, x2) / mapping.det(x1, x2)
    raise ValueError("form degree must be 0, 1 or 2")


def pullback(ell, mapping, f, star=False):
    """Logical field whose pushforward is the physical field f(x, y)."""
    if ell == 0:
        return lambda x1, x2: f(*mapping(x1, x2))
    if ell == 1:
        def g(x1, x2):
            J = mapping.jacobian(x1, x2)
            u = f(*mapping(x1, x2))
            if star:
                d = _det(J)
                v = _matvec(_inv(J), u)
                return d * v[0], d * v[1]
            return _matvec(_T(J), u)
        return g
    if ell == 2:
        return lambda x1, x2: mapping.det(x1, x2) * f(*mapping(x1, x2))
    raise ValueError("form degree must be 0, 1 or 2")


def _magnitude(v):
    if isinstance(v, tuple):
        return np.sqrt(v[0] ** 2 + v[1] ** 2)
    return np.abs(v)


def lp_norm(ell, mappings, fields, p=2, q=6, cells=8, star=False):
    """Physical L^p norm of a field given by logical evaluators on each patch.

    ``fields[k]`` is a logical (pulled-back) form of degree ell on patch k.
    ``cells`` is an integer or a breakpoint array per patch; each cell gets a
    q x q Gauss rule.  p = inf takes the max over nodes and cell midpoints.
    """
    return lp_norms(ell, mappings, fields, (p,), q, cells, star)[0]


def lp_norms(ell, mappings, fields, ps, q=6, cells=8, star=False):
    """Several L^p norms from one evaluation per patch."""
    if not isinstance(mappings, (list, tuple)):
        mappings, fields = [mappings], [fields]
    if not isinstance(cells, (list, tuple)):
        cells = [cells] * len(mappings)
    inf = [p == np.inf or p == "inf" for p in ps]
    total = np.zeros(len(ps))
    for F, f, c in zip(mappings, fields, cells):
        b = np.linspace(0.0, 1.0, c + 1) if np.isscalar(c) else np.asarray(c, dtype=float)
        x, w = gauss_on(b[:-1], b[1:], q)
        x, w = x.ravel(), w.ravel()
        xm = np.concatenate([x, 0.5 * (b[:-1] + b[1:])])
        X1, X2 = np.meshgrid(xm, xm, indexing="ij")
        mag = _magnitude(pushforward(ell, F, f, star)(X1, X2))
        g = mag[:x.size, :x.size]
        W = np.outer(w, w) * F.det(X1[:x.size, :x.size], X2[:x.size, :x.size])
        for i, p in enumerate(ps):
            if inf[i]:
                total[i] = max(total[i], float(mag.max()))
            else:
                total[i] += float(np.sum(W * g ** p))
    return [t if inf[i] else t ** (1.0 / p) for i, (t, p) in enumerate(zip(total, ps))]
