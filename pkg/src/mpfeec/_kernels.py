"""Hot loops for B-spline evaluation.

Two interchangeable backends are provided: numba-compiled per-point loops and
vectorized numpy.  ``MPFEEC_BACKEND=numpy`` selects the numpy path; anything
else (default) uses numba when it imports.
"""
import os

import numpy as np

try:
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def find_spans(knots, degree, x):
    """Index of the knot span holding each x; x=1 takes the last nonempty span."""
    n = len(knots) - degree - 2
    s = np.searchsorted(knots, x, side="right") - 1
    return np.clip(s, degree, n)


def _basis_numpy(knots, degree, spans, x):
    """Values and first derivatives of the p+1 active functions, shape (m, p+1)."""
    p = degree
    m = len(x)
    N = np.zeros((m, p + 1))
    N[:, 0] = 1.0
    Nlow = np.zeros((m, max(p, 1)))
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - x
        if j == p:
            Nlow[:, :p] = N[:, :p]
        saved = np.zeros(m)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    dN = np.zeros((m, p + 1))
    if p >= 1:
        for r in range(p + 1):
            i = spans - p + r
            if r >= 1:
                den = knots[i + p] - knots[i]
                ok = den > 0
                dN[ok, r] += p * Nlow[ok, r - 1] / den[ok]
            if r <= p - 1:
                den = knots[i + p + 1] - knots[i + 1]
                ok = den > 0
                dN[ok, r] -= p * Nlow[ok, r] / den[ok]
    return N, dN


if _HAVE_NUMBA:

    @njit(cache=True)
    def _basis_numba(knots, degree, spans, x):
        p = degree
        m = x.shape[0]
        Nout = np.zeros((m, p + 1))
        dNout = np.zeros((m, p + 1))
        N = np.zeros(p + 1)
        Nlow = np.zeros(p + 1)
        left = np.zeros(p + 1)
        right = np.zeros(p + 1)
        for k in range(m):
            s = spans[k]
            xk = x[k]
            N[:] = 0.0
            N[0] = 1.0
            for j in range(1, p + 1):
                left[j] = xk - knots[s + 1 - j]
                right[j] = knots[s + j] - xk
                if j == p:
                    for r in range(p):
                        Nlow[r] = N[r]
                saved = 0.0
                for r in range(j):
                    temp = N[r] / (right[r + 1] + left[j - r])
                    N[r] = saved + right[r + 1] * temp
                    saved = left[j - r] * temp
                N[j] = saved
            for r in range(p + 1):
                Nout[k, r] = N[r]
                if p >= 1:
                    i = s - p + r
                    d = 0.0
                    if r >= 1:
                        den = knots[i + p] - knots[i]
                        if den > 0.0:
                            d += p * Nlow[r - 1] / den
                    if r <= p - 1:
                        den = knots[i + p + 1] - knots[i + 1]
                        if den > 0.0:
                            d -= p * Nlow[r] / den
                    dNout[k, r] = d
        return Nout, dNout


def backend():
    """Name of the active backend."""
    if os.environ.get("MPFEEC_BACKEND", "numba").lower() == "numpy" or not _HAVE_NUMBA:
        return "numpy"
    return "numba"


def basis_funs(knots, degree, x, which=None):
    """Spans, values and derivatives of active basis functions at points x."""
    x = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)))
    knots = np.ascontiguousarray(knots, dtype=float)
    spans = find_spans(knots, degree, x).astype(np.int64)
    name = which or backend()
    if name == "numba" and _HAVE_NUMBA:
        N, dN = _basis_numba(knots, int(degree), spans, x)
    else:
        N, dN = _basis_numpy(knots, int(degree), spans, x)
    return spans, N, dN
