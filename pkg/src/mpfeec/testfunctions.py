"""Smooth test fields with exact derivatives.

A scalar field is a python function of two jets; one evaluation returns the
value and both partial derivatives.  Gradients, curls and divergences of the
test fields are therefore exact and share one expression with the field.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class Jet:
    """Value with first partial derivatives in x and y."""

    __slots__ = ("v", "dx", "dy")
    __array_priority__ = 100

    def __init__(self, v, dx=0.0, dy=0.0):
        self.v, self.dx, self.dy = v, dx, dy

    @staticmethod
    def _lift(o):
        return o if isinstance(o, Jet) else Jet(o)

    def __add__(self, o):
        o = self._lift(o)
        return Jet(self.v + o.v, self.dx + o.dx, self.dy + o.dy)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.dx, -self.dy)

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        o = self._lift(o)
        return Jet(self.v * o.v, self.dx * o.v + self.v * o.dx, self.dy * o.v + self.v * o.dy)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o)
        return self * o._chain(1.0 / o.v, -1.0 / o.v ** 2)

    def __rtruediv__(self, o):
        return self._lift(o) / self

    def __pow__(self, k):
        if k == 0:
            return Jet(np.ones_like(self.v) if np.ndim(self.v) else 1.0)
        return self._chain(self.v ** k, k * self.v ** (k - 1))

    def _chain(self, f, df):
        return Jet(f, df * self.dx, df * self.dy)


def exp(z):
    if not isinstance(z, Jet):
        return np.exp(z)
    e = np.exp(z.v)
    return z._chain(e, e)


def sin(z):
    if not isinstance(z, Jet):
        return np.sin(z)
    return z._chain(np.sin(z.v), np.cos(z.v))


def cos(z):
    if not isinstance(z, Jet):
        return np.cos(z)
    return z._chain(np.cos(z.v), -np.sin(z.v))


def sqrt(z):
    if not isinstance(z, Jet):
        return np.sqrt(z)
    r = np.sqrt(z.v)
    return z._chain(r, 0.5 / r)


def value(f, x, y):
    """Evaluate f on plain arrays, skipping derivatives."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return np.asarray(f(x, y), dtype=float) + np.zeros_like(x)


def jet(f, x, y):
    """Evaluate a jet expression f at arrays x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    one, zero = np.ones_like(x), np.zeros_like(x)
    r = f(Jet(x, one, zero), Jet(y, zero, one))
    if not isinstance(r, Jet):
        r = Jet(r + zero, zero, zero)
    return Jet(r.v + zero, r.dx + zero, r.dy + zero)


@dataclass(frozen=True)
class ScalarField:
    name: str
    expr: Callable

    def __call__(self, x, y):
        return value(self.expr, x, y)

    def grad(self, x, y):
        j = jet(self.expr, x, y)
        return j.dx, j.dy

    def rot_grad(self, x, y):
        j = jet(self.expr, x, y)
        return j.dy, -j.dx

    def times(self, b, name=None):
        return ScalarField(name or f"{b.name}*{self.name}", lambda x, y: b.expr(x, y) * self.expr(x, y))


@dataclass(frozen=True)
class VectorField:
    name: str
    e1: Callable
    e2: Callable

    def __call__(self, x, y):
        return value(self.e1, x, y), value(self.e2, x, y)

    def curl(self, x, y):
        return jet(self.e2, x, y).dx - jet(self.e1, x, y).dy

    def div(self, x, y):
        return jet(self.e1, x, y).dx + jet(self.e2, x, y).dy

    def times(self, b, name=None):
        return VectorField(name or f"{b.name}*{self.name}",
                           lambda x, y: b.expr(x, y) * self.e1(x, y),
                           lambda x, y: b.expr(x, y) * self.e2(x, y))


def smooth_scalars():
    """Polynomials up to degree 4 and exp-trig products."""
    return [
        ScalarField("one", lambda x, y: 1.0 + 0.0 * x),
        ScalarField("linear", lambda x, y: 0.3 + 1.1 * x - 0.7 * y),
        ScalarField("quadratic", lambda x, y: x * x - 0.5 * x * y + 0.25 * y * y - 0.2),
        ScalarField("cubic", lambda x, y: x ** 3 - 2.0 * x * y * y + 0.3 * y ** 3 + x),
        ScalarField("quartic", lambda x, y: x ** 4 - x * x * y * y + 0.5 * y ** 4 - 0.7 * x * y ** 3),
        ScalarField("exp-cos", lambda x, y: exp(0.6 * x) * cos(1.3 * y)),
        ScalarField("sin-exp", lambda x, y: sin(2.0 * x + y) * exp(-0.4 * y)),
        ScalarField("trig", lambda x, y: sin(1.7 * x) * cos(2.3 * y) + 0.5 * cos(x - y)),
    ]


def smooth_vectors():
    """Vector fields built from the same families."""
    return [
        VectorField("const", lambda x, y: 1.0 + 0.0 * x, lambda x, y: -0.5 + 0.0 * x),
        VectorField("linear", lambda x, y: 0.2 * x - y, lambda x, y: x + 0.7 * y),
        VectorField("quadratic", lambda x, y: x * y - 0.3 * y * y, lambda x, y: x * x + 0.4 * x * y),
        VectorField("cubic", lambda x, y: y ** 3 - x * x * y, lambda x, y: x ** 3 + 0.5 * x * y * y),
        VectorField("quartic", lambda x, y: x ** 4 - y ** 4 + x * y ** 3, lambda x, y: x * x * y * y - x ** 3 * y),
        VectorField("exp-trig", lambda x, y: exp(0.5 * x) * sin(1.2 * y), lambda x, y: cos(0.8 * x) * exp(-0.3 * y)),
        VectorField("trig", lambda x, y: sin(x + 2.0 * y) + y * y, lambda x, y: cos(x * y)),
    ]


def _boundary_factor(P0, Pm, P1, tol=1e-9):
    """Line or circle through three points of a boundary edge, as a jet expression."""
    d = P1 - P0
    L = np.hypot(*d)
    nrm = np.array([-d[1], d[0]]) / L
    if abs(np.dot(Pm - P0, nrm)) <= tol * max(1.0, L):
        if nrm[np.argmax(np.abs(nrm))] < 0:
            nrm = -nrm
        c = float(np.dot(nrm, P0))
        key = ("line",) + tuple(np.round([nrm[0], nrm[1], c], 9))
        return key, (lambda x, y, a=nrm[0], b=nrm[1], c=c: a * x + b * y - c)
    A = np.array([[2 * (Pm - P0)[0], 2 * (Pm - P0)[1]], [2 * (P1 - P0)[0], 2 * (P1 - P0)[1]]])
    r = np.array([Pm @ Pm - P0 @ P0, P1 @ P1 - P0 @ P0])
    ctr = np.linalg.solve(A, r)
    R2 = float((P0 - ctr) @ (P0 - ctr))
    key = ("circle",) + tuple(np.round(np.concatenate([ctr, [R2]]), 9))
    return key, (lambda x, y, cx=ctr[0], cy=ctr[1], R2=R2: ((x - cx) ** 2 + (y - cy) ** 2 - R2) / R2)


def bubble(cx):
    """Smooth scalar vanishing on every boundary edge of the complex.

    Each boundary edge contributes the line or circle through it; repeated
    supporting curves are used once.
    """
    factors = {}
    for e in cx.edges:
        if not e.boundary:
            continue
        s = e.sides[0]
        F = cx.patches[s.patch].mapping
        pts = [np.array(F(*s.to_logical(t, float(s.e_perp)))) for t in (0.0, 0.5, 1.0)]
        key, fn = _boundary_factor(*pts)
        factors.setdefault(key, fn)
    fns = list(factors.values())

    def b(x, y):
        out = 1.0
        for f in fns:
            out = out * f(x, y)
        return out

    return ScalarField("bubble", b)


def smooth_set(cx, kind="scalar"):
    """Smooth set for the complex; in homogeneous mode each member is multiplied by the bubble."""
    base = smooth_scalars() if kind == "scalar" else smooth_vectors()
    if not cx.homogeneous:
        return base
    b = bubble(cx)
    return [f.times(b) for f in base]


def stress_set(cx, kind="scalar"):
    """Fixed ten-function set for operator ratios."""
    s = smooth_scalars() + [
        ScalarField("osc", lambda x, y: sin(6.0 * x) * cos(5.0 * y)),
        ScalarField("peak", lambda x, y: exp(-8.0 * ((x - 0.4) ** 2 + (y - 0.6) ** 2))),
    ]
    if kind == "scalar":
        out = s[:10]
    else:
        v = smooth_vectors() + [
            VectorField("osc", lambda x, y: sin(6.0 * y), lambda x, y: cos(5.0 * x)),
            VectorField("peak", lambda x, y: exp(-8.0 * ((x - 0.4) ** 2 + y * y)),
                        lambda x, y: exp(-6.0 * (x * x + (y - 0.5) ** 2))),
            VectorField("swirl", lambda x, y: -y * exp(-x * x), lambda x, y: x * exp(-y * y)),
        ]
        out = v[:10]
    if not cx.homogeneous:
        return out
    b = bubble(cx)
    return [f.times(b) for f in out]
