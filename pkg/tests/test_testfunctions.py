import numpy as np
import pytest

from helpers import FIXTURES, fixture_complex
from mpfeec.testfunctions import Jet, bubble, jet, smooth_scalars, smooth_set, smooth_vectors, sqrt, \
    stress_set
from mpfeec.topology import HOMOGENEOUS

H = 1e-6
X, Y = np.random.default_rng(0).uniform(0.1, 0.9, (2, 25))


@pytest.mark.parametrize("f", smooth_scalars(), ids=lambda f: f.name)
def test_scalar_gradients(f):
    gx, gy = f.grad(X, Y)
    assert np.allclose(gx, (f(X + H, Y) - f(X - H, Y)) / (2 * H), atol=1e-7)
    assert np.allclose(gy, (f(X, Y + H) - f(X, Y - H)) / (2 * H), atol=1e-7)
    r1, r2 = f.rot_grad(X, Y)
    assert np.allclose(r1, gy) and np.allclose(r2, -gx)


@pytest.mark.parametrize("u", smooth_vectors(), ids=lambda u: u.name)
def test_vector_derivatives(u):
    d1x = (u(X + H, Y)[0] - u(X - H, Y)[0]) / (2 * H)
    d1y = (u(X, Y + H)[0] - u(X, Y - H)[0]) / (2 * H)
    d2x = (u(X + H, Y)[1] - u(X - H, Y)[1]) / (2 * H)
    d2y = (u(X, Y + H)[1] - u(X, Y - H)[1]) / (2 * H)
    assert np.allclose(u.curl(X, Y), d2x - d1y, atol=1e-7)
    assert np.allclose(u.div(X, Y), d1x + d2y, atol=1e-7)


def test_jet_arithmetic():
    f = lambda x, y: (x * y - 2.0) / (1.0 + x * x) + sqrt(x + y) - 3.0 / (y + 2.0) + x ** 0
    j = jet(f, X, Y)
    fd = (f(X + H, Y) - f(X - H, Y)) / (2 * H)
    assert np.allclose(j.dx, fd, atol=1e-7)
    assert isinstance(Jet(1.0) - 2.0, Jet) and (2.0 - Jet(1.0)).v == 1.0


@pytest.mark.parametrize("name", FIXTURES + ("l_shape",))
def test_bubble_vanishes_on_boundary(name):
    cx = fixture_complex(name)
    b = bubble(cx)
    t = np.linspace(0.0, 1.0, 11)
    for e in cx.edges:
        s = e.sides[0]
        P = cx.patches[s.patch].mapping(*s.to_logical(t, np.full_like(t, float(s.e_perp))))
        vals = np.abs(b(*P))
        if e.boundary:
            assert vals.max() <= 1e-12
        elif name != "l_shape":
            # lines through the re-entrant corner of the L contain its interior edges
            assert vals[1:-1].min() > 1e-6


def test_sets():
    cx = fixture_complex("two_patch_nested")
    assert len(stress_set(cx, "scalar")) == 10 and len(stress_set(cx, "vector")) == 10
    assert len(smooth_set(cx, "vector")) == len(smooth_vectors())
    hx = fixture_complex("two_patch_nested", HOMOGENEOUS)
    f = smooth_set(hx)[0]
    assert np.isclose(f(0.0, 0.3), 0.0) and not np.isclose(f(0.4, 0.3), 0.0)
