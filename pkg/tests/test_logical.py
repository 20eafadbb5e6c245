import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import spaces, spline_oracle
from mpfeec.errors import DimensionMismatch
from mpfeec.logical import (
    LogicalDeRham,
    curl_logical,
    extension_index_set,
    flat,
    grad_logical,
    grid,
    prefix_rule,
    project0_logical,
    project1_logical,
    project2_logical,
)
from mpfeec.testfunctions import smooth_scalars, smooth_vectors
from mpfeec.univariate import uniform_space


def _dense(S1, S2, c, x1, x2, d1=0, d2=0):
    B1 = spline_oracle(S1, x1, d1)
    B2 = spline_oracle(S2, x2, d2)
    C = grid(c, S1.dim, S2.dim)
    return np.einsum("ar,rs,as->a", B1, C, B2)


@given(spaces(pmax=3, cmax=6), st.integers(0, 2**31))
def test_eval_matches_dense(space, seed):
    rng = np.random.default_rng(seed)
    L = LogicalDeRham(space)
    x1, x2 = rng.uniform(0, 1, 40), rng.uniform(0, 1, 40)
    c0 = rng.standard_normal(L.dims[0])
    assert np.allclose(L.eval0(c0, x1, x2), _dense(space, space, c0, x1, x2), atol=1e-12)
    g1, g2 = L.eval1(L.grad @ c0, x1, x2)
    assert np.allclose(g1, _dense(space, space, c0, x1, x2, 1, 0), atol=1e-9)
    assert np.allclose(g2, _dense(space, space, c0, x1, x2, 0, 1), atol=1e-9)


@given(spaces(pmax=3, cmax=6), st.integers(0, 2**31))
def test_curl_grad_zero(space, seed):
    L = LogicalDeRham(space)
    c0 = np.random.default_rng(seed).standard_normal(L.dims[0])
    assert np.abs(curl_logical(L, grad_logical(L, c0))).max() <= 1e-12 * max(1, np.abs(c0).max())


@given(spaces(pmax=3, cmax=6), st.integers(0, 2**31))
def test_curl_matches_dense(space, seed):
    rng = np.random.default_rng(seed)
    L = LogicalDeRham(space)
    c1 = rng.standard_normal(L.dims[1])
    a, b = L.split1(c1)
    x1, x2 = rng.uniform(0, 1, 30), rng.uniform(0, 1, 30)
    ds = L.dspace
    ref = _dense(space, ds, b, x1, x2, 1, 0) - _dense(ds, space, a, x1, x2, 0, 1)
    got = L.eval2(curl_logical(L, c1), x1, x2)
    assert np.allclose(got, ref, atol=1e-8 * max(1.0, np.abs(ref).max()))


@pytest.mark.parametrize("dual", ["l2", "local", "greville"])
@pytest.mark.parametrize("p,n", [(1, 3), (2, 5), (3, 4)])
def test_projections_reproduce(dual, p, n):
    rng = np.random.default_rng(p * 10 + n)
    L = LogicalDeRham(uniform_space(p, n), dual)
    c0 = rng.standard_normal(L.dims[0])
    assert np.allclose(project0_logical(L, lambda a, b: L.eval0(c0, a, b)), c0, atol=1e-11)
    c1 = rng.standard_normal(L.dims[1])
    assert np.allclose(project1_logical(L, lambda a, b: L.eval1(c1, a, b)), c1, atol=1e-10)
    c2 = rng.standard_normal(L.dims[2])
    assert np.allclose(project2_logical(L, lambda a, b: L.eval2(c2, a, b)), c2, atol=1e-10)


@pytest.mark.parametrize("dual", ["l2", "local"])
def test_logical_commuting(dual):
    L = LogicalDeRham(uniform_space(3, 6), dual)
    for f in smooth_scalars():
        lhs = grad_logical(L, project0_logical(L, f))
        rhs = project1_logical(L, f.grad)
        assert np.abs(lhs - rhs).max() <= 1e-11 * max(1.0, np.abs(rhs).max())
    for u in smooth_vectors():
        lhs = curl_logical(L, project1_logical(L, u))
        rhs = project2_logical(L, u.curl)
        assert np.abs(lhs - rhs).max() <= 1e-11 * max(1.0, np.abs(rhs).max())


def test_prefix_rule():
    b = np.array([0.0, 0.3, 0.7, 1.0])
    t = np.array([0.0, 0.2, 0.3, 0.95])
    Z, W = prefix_rule(b, t, 4)
    assert np.allclose(W @ Z ** 6, t ** 7 / 7, atol=1e-14)


def test_extension_index_set():
    L = LogicalDeRham(uniform_space(2, 4))
    (i1, i2), hull = extension_index_set(L, ((0.0, 0.1), (0.6, 0.7)))
    assert list(i1) == [0, 1, 2] and list(i2) == [2, 3, 4]
    assert hull == ((0.0, 0.75), (0.0, 1.0))
    assert extension_index_set(L, None)[1] is None


def test_dimension_mismatch():
    L = LogicalDeRham(uniform_space(2, 3))
    with pytest.raises(DimensionMismatch):
        grad_logical(L, np.zeros(3))


def test_flat_grid_roundtrip():
    a = np.arange(12.0).reshape(3, 4)
    assert np.array_equal(grid(flat(a), 3, 4), a)
    assert flat(a)[1] == a[1, 0]
