"""Independent reference computations used by the tests."""
import numpy as np

from mpfeec.geometry import pullback
from mpfeec.univariate import gauss_on


def winding_numbers(loop, X, Y):
    """Winding number of a closed polyline around each point (crossing rule)."""
    P = np.asarray(loop, dtype=float)
    Q = np.roll(P, -1, axis=0)
    w = np.zeros(np.shape(X), dtype=int)
    for (x0, y0), (x1, y1) in zip(P, Q):
        cross = (x1 - x0) * (Y - y0) - (X - x0) * (y1 - y0)
        up = (y0 <= Y) & (y1 > Y) & (cross > 0)
        down = (y0 > Y) & (y1 <= Y) & (cross < 0)
        w += up.astype(int) - down.astype(int)
    return w


def _compressed_winding(loop, xa, xb):
    """Winding numbers at the grid points xa x xb.

    The winding number is constant on each cell of the grid spanned by the
    loop coordinates, so the crossing rule runs once per such cell.
    """
    ga, gb = np.unique(loop[:, 0]), np.unique(loop[:, 1])
    ca = np.concatenate([[ga[0] - 1.0], 0.5 * (ga[:-1] + ga[1:]), [ga[-1] + 1.0]])
    cb = np.concatenate([[gb[0] - 1.0], 0.5 * (gb[:-1] + gb[1:]), [gb[-1] + 1.0]])
    W = winding_numbers(loop, *np.meshgrid(ca, cb, indexing="ij"))
    return W[np.searchsorted(ga, xa)[:, None], np.searchsorted(gb, xb)[None, :]]


class RasterOracle:
    """Integral of a 2-form over the region enclosed by a closed chart polyline.

    Each chart piece is rasterized into n x n uniform cells; the raster lines
    are augmented by the loop coordinates so that the winding number is
    constant on every cell.  Only cells inside the bounding box of the loop
    are visited, since the winding number vanishes outside it.  Cells get a
    g x g Gauss rule.  Chart pieces are axis permutations and reflections of
    the logical square, so integrals of unsplit uniform cells are cached once
    per patch in logical coordinates.
    """

    def __init__(self, cx, f, n=512, g=2):
        self.cx, self.f, self.n = cx, f, n
        z, w = gauss_on(0.0, 1.0, g)
        self.z, self.w = z.ravel(), w.ravel()
        self._cache = {}

    def _cells(self, patch, to_logical, lo_a, hi_a, lo_b, hi_b):
        fh = pullback(2, self.cx.patches[patch].mapping, self.f)
        da, db = hi_a - lo_a, hi_b - lo_b
        acc = np.zeros(np.shape(lo_a))
        for zi, wi in zip(self.z, self.w):
            for zj, wj in zip(self.z, self.w):
                x1, x2 = to_logical(lo_a + zi * da, lo_b + zj * db)
                acc += wi * wj * fh(x1, x2)
        return acc * np.abs(da * db)

    def _uniform(self, patch):
        if patch not in self._cache:
            u = np.linspace(0.0, 1.0, self.n + 1)
            A0, B0 = np.meshgrid(u[:-1], u[:-1], indexing="ij")
            A1, B1 = np.meshgrid(u[1:], u[1:], indexing="ij")
            self._cache[patch] = self._cells(patch, lambda a, b: (a, b), A0, A1, B0, B1)
        return self._cache[patch]

    def __call__(self, chart, loop):
        loop = np.asarray(loop, dtype=float)
        total = 0.0
        for pc in chart.pieces:
            (a0, a1), (b0, b1) = pc.box
            lo_a, hi_a = max(a0, loop[:, 0].min()), min(a1, loop[:, 0].max())
            lo_b, hi_b = max(b0, loop[:, 1].min()), min(b1, loop[:, 1].max())
            if hi_a <= lo_a or hi_b <= lo_b:
                continue
            ua, ub = np.linspace(a0, a1, self.n + 1), np.linspace(b0, b1, self.n + 1)
            la = _merge(ua, loop[:, 0], lo_a, hi_a)
            lb = _merge(ub, loop[:, 1], lo_b, hi_b)
            ma, mb = 0.5 * (la[:-1] + la[1:]), 0.5 * (lb[:-1] + lb[1:])
            w = _compressed_winding(loop, ma, mb)
            i, j = np.nonzero(w)
            if i.size == 0:
                continue
            I = np.clip(np.searchsorted(ua, ma, side="right") - 1, 0, self.n - 1)
            J = np.clip(np.searchsorted(ub, mb, side="right") - 1, 0, self.n - 1)
            whole_a = (la[:-1] == ua[I]) & (la[1:] == ua[I + 1])
            whole_b = (lb[:-1] == ub[J]) & (lb[1:] == ub[J + 1])
            whole = whole_a[i] & whole_b[j]
            vals = np.empty(i.size)
            # logical cell of each whole chart cell, located through its centre
            x1, x2 = pc.to_logical(ma[i[whole]], mb[j[whole]])
            k1 = np.clip(np.floor(x1 * self.n).astype(int), 0, self.n - 1)
            k2 = np.clip(np.floor(x2 * self.n).astype(int), 0, self.n - 1)
            vals[whole] = self._uniform(pc.patch)[k1, k2]
            s = ~whole
            vals[s] = self._cells(pc.patch, pc.to_logical, la[i[s]], la[i[s] + 1], lb[j[s]], lb[j[s] + 1])
            total += pc.orientation * float(np.sum(w[i, j] * vals))
        return total


def _merge(uniform, extra, lo, hi, tol=1e-13):
    """Uniform lines inside [lo, hi] merged with the clipped extra coordinates."""
    extra = np.clip(extra, lo, hi)
    inside = uniform[(uniform >= lo) & (uniform <= hi)]
    out = np.unique(np.concatenate([inside, extra, [lo, hi]]))
    keep = np.concatenate([[True], np.diff(out) > tol])
    out = out[keep]
    # snap merged lines back onto uniform ones they duplicate
    idx = np.searchsorted(uniform, out)
    for shift in (0, -1):
        k = np.clip(idx + shift, 0, len(uniform) - 1)
        near = np.abs(uniform[k] - out) <= tol
        out[near] = uniform[k[near]]
    return np.unique(out)


def raster_region_integral(cx, f, chart, loop, n=512, g=2):
    return RasterOracle(cx, f, n, g)(chart, loop)
