"""Univariate B-spline spaces forming 1D de Rham pairs.

A space of degree p on breakpoints 0 = b_0 < ... < b_m = 1 with smoothness
alpha_j at interior breakpoints uses the open knot vector where b_j is
repeated p - alpha_j times.  The derivative space has degree p-1 and
regularity alpha-1, obtained by dropping the first and last knot.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular

from . import _kernels
from .errors import InvalidKnots, NestednessExpansionFailed, QuadratureTooCoarse, SingularGram

KNOT_TOL = 1e-12


@lru_cache(maxsize=64)
def _leggauss(q):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_on(a, b, q):
    """Gauss-Legendre nodes and weights on [a, b] (broadcasts over a, b)."""
    x, w = _leggauss(q)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    return a + (b - a) * x, (b - a) * w


@dataclass(frozen=True, eq=False)
class UnivariateSplineSpace:
    degree: int
    breakpoints: np.ndarray
    regularity: np.ndarray
    knots: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return len(self.knots) - self.degree - 1

    @property
    def n(self):
        """Index of the last basis function."""
        return self.dim - 1

    @property
    def ncells(self):
        return len(self.breakpoints) - 1

    @property
    def cell_widths(self):
        return np.diff(self.breakpoints)

    @property
    def key(self):
        return (self.degree, tuple(np.round(self.breakpoints, 14)), tuple(self.regularity))

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, UnivariateSplineSpace) and self.key == other.key

    def is_symmetric(self):
        b = self.breakpoints
        return bool(np.allclose(b, 1.0 - b[::-1], atol=KNOT_TOL, rtol=0)
                    and np.array_equal(self.regularity, self.regularity[::-1]))

    def support(self, i):
        """Closed support [t_i, t_{i+p+1}] of basis function i."""
        return float(self.knots[i]), float(self.knots[i + self.degree + 1])

    def supports(self):
        i = np.arange(self.dim)
        return np.stack([self.knots[i], self.knots[i + self.degree + 1]], axis=1)

    def basis_funs(self, x):
        return _kernels.basis_funs(self.knots, self.degree, x)

    def basis_matrix(self, x, deriv=0, sparse=False):
        """Matrix B with B[a, i] = lambda_i^(deriv)(x_a)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        spans, N, dN = self.basis_funs(x)
        vals = N if deriv == 0 else dN
        p = self.degree
        rows = np.repeat(np.arange(len(x)), p + 1)
        cols = (spans[:, None] - p + np.arange(p + 1)[None, :]).ravel()
        B = sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(len(x), self.dim))
        return B if sparse else B.toarray()

    def evaluate(self, coeffs, x, deriv=0):
        return self.basis_matrix(x, deriv, sparse=True) @ np.asarray(coeffs, dtype=float)

    def quadrature(self, q):
        """Per-cell Gauss rule: nodes, weights, owning cell of each node."""
        b = self.breakpoints
        x, w = gauss_on(b[:-1], b[1:], q)
        cells = np.repeat(np.arange(self.ncells), q)
        return x.ravel(), w.ravel(), cells

    def greville(self):
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        t = self.knots
        return np.array([t[i + 1:i + p + 1].mean() for i in range(self.dim)])

    def gram(self, q=None):
        q = q or self.degree + 2
        x, w, _ = self.quadrature(q)
        B = self.basis_matrix(x)
        return B.T @ (w[:, None] * B)

    def cell_of(self, x):
        """Cell index of x using the same right-continuous convention as evaluation."""
        c = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(c, 0, self.ncells - 1)


def _knots_from(degree, breaks, reg):
    inner = np.repeat(breaks[1:-1], degree - reg)
    return np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)])


def _build(degree, breakpoints, regularity):
    b = np.asarray(breakpoints, dtype=float).ravel()
    if b.size < 2 or abs(b[0]) > KNOT_TOL or abs(b[-1] - 1.0) > KNOT_TOL:
        raise InvalidKnots("breakpoints must start at 0 and end at 1")
    if np.any(np.diff(b) <= KNOT_TOL):
        raise InvalidKnots("breakpoints must be strictly increasing")
    b[0], b[-1] = 0.0, 1.0
    m = b.size - 2
    if regularity is None:
        reg = np.full(m, degree - 1, dtype=int)
    else:
        reg = np.atleast_1d(np.asarray(regularity, dtype=int)).ravel()
        if reg.size == 1 and m != 1:
            reg = np.full(m, int(reg[0]), dtype=int)
        if reg.size != m:
            raise InvalidKnots(f"expected {m} interior regularities, got {reg.size}")
    return UnivariateSplineSpace(int(degree), b, reg, _knots_from(degree, b, reg))


def make_space(degree, breakpoints, regularity=None):
    """Spline space of given degree; regularity defaults to maximal (p-1)."""
    if int(degree) != degree or degree < 1:
        raise InvalidKnots("degree must be an integer >= 1")
    degree = int(degree)
    if regularity is not None:
        r = np.atleast_1d(np.asarray(regularity))
        if np.any(r < 0) or np.any(r >= degree):
            raise InvalidKnots("regularity must satisfy 0 <= alpha < p")
    return _build(degree, breakpoints, regularity)


def uniform_space(degree, ncells, regularity=None):
    return make_space(degree, np.linspace(0.0, 1.0, ncells + 1), regularity)


def eval_basis(space, x, deriv_order=0):
    """First active index and the p+1 active values (or derivatives) at scalar x."""
    spans, N, dN = space.basis_funs(np.array([float(x)]))
    vals = N[0] if deriv_order == 0 else dN[0]
    return int(spans[0] - space.degree), vals.copy()


def derivative_space(space):
    if space.degree < 1:
        raise InvalidKnots("derivative of a degree-0 space")
    return _build(space.degree - 1, space.breakpoints, space.regularity - 1)


def reflect(space):
    """The space pulled back by z -> 1 - z; basis index i maps to n - i."""
    return _build(space.degree, 1.0 - space.breakpoints[::-1], space.regularity[::-1])


def differentiation_matrix(space):
    """Sparse n x (n+1) matrix taking coefficients of f to those of f'."""
    p, t, n = space.degree, space.knots, space.n
    j = np.arange(n)
    a = p / (t[j + p + 1] - t[j + 1])
    rows = np.concatenate([j, j])
    cols = np.concatenate([j, j + 1])
    return sp.csr_matrix((np.concatenate([-a, a]), (rows, cols)), shape=(n, n + 1))


def antiderivative_matrix(space, constant_at=0.0):
    """Dense (n+1) x n matrix taking g to G with G' = g and G(constant_at) = 0."""
    p, t, n = space.degree, space.knots, space.n
    A = np.zeros((n + 1, n))
    for i in range(1, n + 1):
        A[i] = A[i - 1]
        A[i, i - 1] += (t[i + p] - t[i]) / p
    row = space.basis_matrix([constant_at])[0]
    return A - np.outer(np.ones(n + 1), row @ A)


@dataclass(frozen=True, eq=False)
class DualBasis1D:
    """Dual functionals as a quadrature-point matrix: coeffs = matrix @ f(points)."""

    kind: str
    points: np.ndarray
    matrix: np.ndarray
    gram: np.ndarray

    def apply(self, values):
        return self.matrix @ values


def _local_cell(space, i):
    b = space.breakpoints
    lo, hi = space.support(i)
    cells = np.nonzero((b[:-1] >= lo - KNOT_TOL) & (b[1:] <= hi + KNOT_TOL))[0]
    w = b[cells + 1] - b[cells]
    centre = 0.5 * (lo + hi)
    dist = np.abs(0.5 * (b[cells] + b[cells + 1]) - centre)
    order = np.lexsort((cells, np.round(dist, 12), -np.round(w, 12)))
    return int(cells[order[0]])


@lru_cache(maxsize=256)
def _dual_cached(space, kind, q):
    p = space.degree
    G = space.gram()
    if kind == "greville":
        g = space.greville()
        C = space.basis_matrix(g)
        try:
            D = np.linalg.inv(C)
        except np.linalg.LinAlgError as exc:
            raise SingularGram(str(exc)) from exc
        return DualBasis1D(kind, g, D, G)
    x, w, cells = space.quadrature(q)
    B = space.basis_matrix(x)
    if kind == "l2":
        if np.linalg.cond(G) > 1e12:
            raise SingularGram("Gram matrix is numerically singular")
        D = np.linalg.solve(G, B.T * w[None, :])
        return DualBasis1D(kind, x, D, G)
    if kind == "local":
        D = np.zeros((space.dim, x.size))
        spans = _kernels.find_spans(space.knots, p, space.breakpoints[:-1] + 0.5 * space.cell_widths)
        inv = {}
        for i in range(space.dim):
            c = _local_cell(space, i)
            first = int(spans[c]) - p
            if c not in inv:
                # QR of the weighted cell collocation matrix avoids squaring its conditioning
                sel = cells == c
                sw = np.sqrt(w[sel])
                Q, R = np.linalg.qr(sw[:, None] * B[sel][:, first:first + p + 1])
                inv[c] = (sw[:, None] * solve_triangular(R, Q.T, lower=False).T, sel)
            rows, sel = inv[c]
            D[i, sel] = rows[:, i - first]
        return DualBasis1D(kind, x, D, G)
    raise ValueError(f"unknown dual kind {kind!r}")


def make_dual_basis(space, kind="l2", q=None):
    """Biorthogonal dual functionals of the given kind ('l2', 'local' or 'greville')."""
    q = q or space.degree + 3
    if q < space.degree + 1 and kind != "greville":
        warnings.warn(f"quadrature order {q} < p+1 = {space.degree + 1}", QuadratureTooCoarse,
                      stacklevel=2)
    return _dual_cached(space, kind, int(q))


def _multiplicities(space):
    return space.degree - space.regularity


def is_nested(coarse, fine, flip=False):
    """Whether the coarse space (reflected if flip) is a subspace of the fine one."""
    if flip:
        coarse = reflect(coarse)
    if coarse.degree > fine.degree:
        return False
    dp = fine.degree - coarse.degree
    fb = fine.breakpoints[1:-1]
    fm = _multiplicities(fine)
    for b, m in zip(coarse.breakpoints[1:-1], _multiplicities(coarse)):
        hit = np.nonzero(np.abs(fb - b) <= KNOT_TOL)[0]
        if hit.size == 0 or fm[hit[0]] < m + dp:
            return False
    return True


@lru_cache(maxsize=256)
def expansion_matrix(coarse, fine, flip=False):
    """E with lambda^c_j(eta(z)) = sum_i E[i, j] lambda^f_i(z), eta(z) = 1-z if flip."""
    dual = make_dual_basis(fine, "l2", fine.degree + 2)
    z = dual.points
    eta = 1.0 - z if flip else z
    E = dual.matrix @ coarse.basis_matrix(eta)
    zc = np.concatenate([z, fine.breakpoints, fine.quadrature(3)[0]])
    res = fine.basis_matrix(zc) @ E - coarse.basis_matrix(1.0 - zc if flip else zc)
    err = float(np.abs(res).max())
    if err > 1e-10:
        raise NestednessExpansionFailed(f"coarse trace not representable on fine side ({err:.2e})")
    E[np.abs(E) < 1e-15] = 0.0
    return E
