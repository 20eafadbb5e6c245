import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpfeec.errors import DegenerateMapping
from mpfeec.geometry import builtin_mapping, lp_norm, lp_norms, pullback, pushforward, square
from mpfeec.testfunctions import smooth_scalars, smooth_vectors

MAPPINGS = [
    ("affine", {"A": [[0.7, 0.2], [-0.1, 0.5]], "b": [0.3, -0.2]}),
    ("bilinear", {"corners": [[0, 0], [1.2, 0.1], [1.0, 1.1], [-0.1, 0.9]]}),
    ("annulus-sector", {"r0": 1.0, "r1": 2.0, "theta0": 0.2, "theta1": 1.3}),
]


def _fd(F, x1, x2, h=1e-6):
    c1 = (np.array(F(x1 + h, x2)) - np.array(F(x1 - h, x2))) / (2 * h)
    c2 = (np.array(F(x1, x2 + h)) - np.array(F(x1, x2 - h))) / (2 * h)
    return np.stack([c1, c2], axis=-1)


@pytest.mark.parametrize("kind,params", MAPPINGS)
def test_jacobian_finite_differences(kind, params):
    F = builtin_mapping(kind, params)
    x = np.random.default_rng(0).uniform(0.05, 0.95, (2, 20))
    J = F.jacobian(x[0], x[1])
    for a in range(20):
        assert np.allclose(J[a], _fd(F, x[0, a], x[1, a]), atol=1e-7)


@pytest.mark.parametrize("kind,params", MAPPINGS)
@pytest.mark.parametrize("ell,star", [(0, False), (1, False), (1, True), (2, False)])
def test_pull_push_inverse(kind, params, ell, star):
    F = builtin_mapping(kind, params)
    f = smooth_scalars()[6] if ell != 1 else smooth_vectors()[5]
    x = np.random.default_rng(1).uniform(0, 1, (2, 30))
    back = pushforward(ell, F, pullback(ell, F, f, star), star)(x[0], x[1])
    ref = f(*F(x[0], x[1]))
    assert np.allclose(back, ref, atol=1e-13)


@pytest.mark.parametrize("kind,params", MAPPINGS)
def test_pullback_commutes_with_derivatives(kind, params):
    F = builtin_mapping(kind, params)
    phi = smooth_scalars()[7]
    u = smooth_vectors()[6]
    x1, x2 = np.random.default_rng(2).uniform(0.1, 0.9, (2, 15))
    h = 1e-5
    p0 = pullback(0, F, phi)
    g = pullback(1, F, phi.grad)(x1, x2)
    assert np.allclose((p0(x1 + h, x2) - p0(x1 - h, x2)) / (2 * h), g[0], atol=1e-7)
    assert np.allclose((p0(x1, x2 + h) - p0(x1, x2 - h)) / (2 * h), g[1], atol=1e-7)
    p1 = pullback(1, F, u)
    c = pullback(2, F, u.curl)(x1, x2)
    fd = (p1(x1 + h, x2)[1] - p1(x1 - h, x2)[1] - p1(x1, x2 + h)[0] + p1(x1, x2 - h)[0]) / (2 * h)
    assert np.allclose(fd, c, atol=1e-6)
    ps = pullback(1, F, u, star=True)
    d = pullback(2, F, u.div)(x1, x2)
    fd = (ps(x1 + h, x2)[0] - ps(x1 - h, x2)[0] + ps(x1, x2 + h)[1] - ps(x1, x2 - h)[1]) / (2 * h)
    assert np.allclose(fd, d, atol=1e-6)


def test_degenerate_mapping():
    with pytest.raises(DegenerateMapping):
        builtin_mapping("affine", A=[[1.0, 2.0], [0.5, 1.0]])
    with pytest.raises(DegenerateMapping):
        builtin_mapping("affine", A=[[0.0, 1.0], [1.0, 0.0]])


def test_unknown_mapping():
    with pytest.raises(ValueError):
        builtin_mapping("spiral")


def test_areas():
    one = lambda x1, x2: 1.0 + 0.0 * x1
    r0, r1, t0, t1 = 1.0, 2.0, 0.2, 1.3
    A = builtin_mapping("annulus-sector", r0=r0, r1=r1, theta0=t0, theta1=t1)
    assert np.isclose(lp_norm(0, A, one, p=1), 0.5 * (r1 ** 2 - r0 ** 2) * (t1 - t0), atol=1e-12)
    S = square(0.0, 0.0, 2.0, 0.5)
    assert np.isclose(lp_norm(0, S, one, p=2), 1.0, atol=1e-13)


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_lp_norms_consistent(hx, hy):
    S = square(0.1, -0.4, hx, hy)
    f = pullback(0, S, smooth_scalars()[2])
    n1, n2, ninf = lp_norms(0, [S], [f], (1, 2, np.inf))
    assert np.isclose(n1, lp_norm(0, S, f, 1))
    assert n1 <= n2 * np.sqrt(hx * hy) * (1 + 1e-12)
    assert n2 <= ninf * np.sqrt(hx * hy) * (1 + 1e-12)


def test_bounds():
    k1, k2 = square(0.0, 0.0, 0.5).bounds()
    assert np.isclose(k1, 0.5 / (0.5 * np.sqrt(2)))
    assert np.isclose(k2, 2.0 * 0.5 * np.sqrt(2))
