"""Tensor-product logical de Rham spaces on the unit square.

Coefficient arrays of a tensor space with sizes (N1, N2) are indexed [i1, i2]
and flattened with i1 fastest (Fortran order).  V^1 stores the first component
(derivative space in x1, V^0 in x2) followed by the second.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch
from .univariate import (
    derivative_space,
    differentiation_matrix,
    gauss_on,
    make_dual_basis,
)


def flat(a):
    return np.asarray(a).ravel(order="F")


def grid(c, n1, n2):
    return np.asarray(c).reshape((n1, n2), order="F")


def _active(space, x, d):
    """Indices and values (or derivatives) of the p+1 active functions at each point."""
    spans, N, dN = space.basis_funs(x)
    p = space.degree
    return spans[:, None] - p + np.arange(p + 1)[None, :], (N if d == 0 else dN)


def prefix_rule(breaks, targets, q):
    """Nodes Z and weights W with (W @ g(Z))[a] ~ int_0^{targets[a]} g.

    Whole cells before the target use a per-cell Gauss rule; the partial cell
    holding the target gets its own q-point rule, so spline integrands that
    are polynomial per cell are integrated exactly up to the rule order.
    """
    targets = np.asarray(targets, dtype=float)
    nc = len(breaks) - 1
    zf, wf = gauss_on(breaks[:-1], breaks[1:], q)
    c = np.clip(np.searchsorted(breaks, targets, side="right") - 1, 0, nc - 1)
    zp, wp = gauss_on(breaks[c], targets, q)
    m = targets.size
    W = np.zeros((m, nc * q + m * q))
    full = np.arange(nc)[None, :] < c[:, None]
    W[:, :nc * q] = np.repeat(full, q, axis=1) * wf.ravel()[None, :]
    for a in range(m):
        W[a, nc * q + a * q:nc * q + (a + 1) * q] = wp[a]
    return np.concatenate([zf.ravel(), zp.ravel()]), W


class LogicalDeRham:
    """V^0 = S x S, V^1 = (S' x S, S x S'), V^2 = S' x S' on the unit square."""

    def __init__(self, space, dual="local", q=None):
        self.space = space
        self.dspace = derivative_space(space)
        self.dual_kind = dual
        self.q = q or space.degree + 3

    @property
    def n(self):
        return self.space.n

    @property
    def degree(self):
        return self.space.degree

    @property
    def dims(self):
        n = self.n
        return (n + 1) ** 2, 2 * n * (n + 1), n * n

    @property
    def shapes(self):
        n = self.n
        return {0: [(n + 1, n + 1)], 1: [(n, n + 1), (n + 1, n)], 2: [(n, n)]}

    @cached_property
    def dual(self):
        return make_dual_basis(self.space, self.dual_kind, self.q)

    @cached_property
    def D(self):
        return differentiation_matrix(self.space)

    @cached_property
    def d1(self):
        """First-direction partial derivative, V^0 -> S' x S."""
        return sp.kron(sp.identity(self.n + 1), self.D, format="csr")

    @cached_property
    def d2(self):
        """Second-direction partial derivative, V^0 -> S x S'."""
        return sp.kron(self.D, sp.identity(self.n + 1), format="csr")

    @cached_property
    def d12(self):
        """Mixed derivative, V^0 -> V^2."""
        return sp.kron(self.D, self.D, format="csr")

    @cached_property
    def grad(self):
        return sp.vstack([self.d1, self.d2], format="csr")

    @cached_property
    def curl(self):
        n = self.n
        dy = sp.kron(self.D, sp.identity(n), format="csr")
        dx = sp.kron(sp.identity(n), self.D, format="csr")
        return sp.hstack([-dy, dx], format="csr")

    def split1(self, c1):
        n = self.n
        c1 = np.asarray(c1)
        return c1[:n * (n + 1)], c1[n * (n + 1):]

    def pi0_grid(self, values):
        """Dual functionals applied to samples on the tensor grid of dual points."""
        Dm = self.dual.matrix
        return flat(Dm @ values @ Dm.T)

    def eval_tensor(self, s1, s2, c, x1, x2, d1=0, d2=0):
        """Pointwise evaluation of a tensor coefficient array at paired points."""
        x1 = np.asarray(x1, dtype=float)
        shape = x1.shape
        x1 = x1.ravel()
        x2 = np.broadcast_to(np.asarray(x2, dtype=float), shape).ravel()
        C = grid(c, s1.dim, s2.dim)
        i1, v1 = _active(s1, x1, d1)
        i2, v2 = _active(s2, x2, d2)
        G = C[i1[:, :, None], i2[:, None, :]]
        return np.einsum("ar,as,ars->a", v1, v2, G).reshape(shape)

    def eval0(self, c, x1, x2, d1=0, d2=0):
        return self.eval_tensor(self.space, self.space, c, x1, x2, d1, d2)

    def eval1(self, c, x1, x2):
        a, b = self.split1(c)
        return (self.eval_tensor(self.dspace, self.space, a, x1, x2),
                self.eval_tensor(self.space, self.dspace, b, x1, x2))

    def eval2(self, c, x1, x2):
        return self.eval_tensor(self.dspace, self.dspace, c, x1, x2)


def _check(spaces, c, ell):
    if np.asarray(c).size != spaces.dims[ell]:
        raise DimensionMismatch(f"expected {spaces.dims[ell]} coefficients for a {ell}-form, "
                                f"got {np.asarray(c).size}")


def _eval_grid(f, x1, x2):
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    return np.broadcast_to(np.asarray(f(X1, X2), dtype=float), X1.shape)


def project0_logical(spaces, f, q=None):
    """Tensor dual projection of a scalar function f(x1, x2) on the unit square."""
    if q is not None and q != spaces.q:
        spaces = LogicalDeRham(spaces.space, spaces.dual_kind, q)
    p = spaces.dual.points
    return spaces.pi0_grid(_eval_grid(f, p, p))


def grad_logical(spaces, c0):
    _check(spaces, c0, 0)
    return spaces.grad @ np.asarray(c0, dtype=float)


def curl_logical(spaces, c1):
    _check(spaces, c1, 1)
    return spaces.curl @ np.asarray(c1, dtype=float)


def project1_logical(spaces, u, q=None):
    """Directional derivatives of projected directional antiderivatives of u = (u1, u2)."""
    pts = spaces.dual.points
    qi = q or spaces.q
    br = spaces.space.breakpoints
    Z, W = prefix_rule(br, pts, qi)
    X1, X2 = np.meshgrid(Z, pts, indexing="ij")
    u1 = np.broadcast_to(np.asarray(u(X1, X2)[0], dtype=float), X1.shape)
    F1 = W @ u1
    X1, X2 = np.meshgrid(pts, Z, indexing="ij")
    u2 = np.broadcast_to(np.asarray(u(X1, X2)[1], dtype=float), X1.shape)
    F2 = u2 @ W.T
    return np.concatenate([spaces.d1 @ spaces.pi0_grid(F1), spaces.d2 @ spaces.pi0_grid(F2)])


def project2_logical(spaces, f, q=None):
    """Mixed derivative of the projected bivariate antiderivative of f."""
    pts = spaces.dual.points
    qi = q or spaces.q
    Z, W = prefix_rule(spaces.space.breakpoints, pts, qi)
    H = W @ _eval_grid(f, Z, Z) @ W.T
    return spaces.d12 @ spaces.pi0_grid(H)


def extension_index_set(spaces, logical_box):
    """Indices whose support meets the closed box, and the hull of their supports."""
    if logical_box is None:
        return (np.array([], int), np.array([], int)), None
    (a1, b1), (a2, b2) = logical_box
    if a1 > b1 or a2 > b2:
        return (np.array([], int), np.array([], int)), None
    S = spaces.space.supports()
    tol = 1e-12
    idx = []
    hull = []
    for a, b in ((a1, b1), (a2, b2)):
        sel = np.nonzero((S[:, 0] <= b + tol) & (S[:, 1] >= a - tol))[0]
        idx.append(sel)
        hull.append((float(S[sel, 0].min()), float(S[sel, 1].max())) if sel.size else None)
    if idx[0].size == 0 or idx[1].size == 0:
        return (np.array([], int), np.array([], int)), None
    return (idx[0], idx[1]), tuple(hull)
