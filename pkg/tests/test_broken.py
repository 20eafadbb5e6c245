import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import FIXTURES, fixture_complex
from mpfeec.broken import (
    BrokenField,
    curl_matrix,
    div_matrix,
    edge_grad_matrix,
    eval_logical,
    from_star,
    grad_matrix,
    layout,
    mixed_deriv_matrix,
    project_pw,
    rot_grad_matrix,
    to_star,
    unrotate_field,
)
from mpfeec.errors import DimensionMismatch
from mpfeec.testfunctions import smooth_scalars, smooth_vectors
from mpfeec.topology import CURL_DIV


@pytest.fixture(scope="module", params=FIXTURES)
def cx(request):
    return fixture_complex(request.param)


def _evaluators(cx, ell, vec):
    f = BrokenField.from_vector(cx, ell, vec)
    return [(lambda k: lambda a, b: eval_logical(cx, f, k, a, b))(p.id) for p in cx.patches]


def test_exact_sequence(cx):
    assert abs(curl_matrix(cx) @ grad_matrix(cx)).max() == 0.0


def test_exact_sequence_star():
    cx = fixture_complex("two_patch_flipped", kind=CURL_DIV)
    assert abs(div_matrix(cx) @ rot_grad_matrix(cx)).max() == 0.0


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_pw_projection_reproduces(cx, ell):
    vec = np.random.default_rng(ell).standard_normal(layout(cx, ell).total)
    out = project_pw(cx, ell, _evaluators(cx, ell, vec), logical=True).vector
    assert np.abs(out - vec).max() <= 1e-10 * np.abs(vec).max()


def test_pw_commuting(cx):
    G, C = grad_matrix(cx), curl_matrix(cx)
    for f in smooth_scalars()[3:6]:
        lhs = G @ project_pw(cx, 0, f).vector
        rhs = project_pw(cx, 1, f.grad).vector
        assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(rhs).max()
    for u in smooth_vectors()[3:6]:
        lhs = C @ project_pw(cx, 1, u).vector
        rhs = project_pw(cx, 2, u.curl).vector
        assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(rhs).max()


def test_mixed_derivative_identity(cx):
    rng = np.random.default_rng(3)
    C = curl_matrix(cx)
    N = layout(cx, 0).total
    for e in cx.edges:
        a, b = rng.standard_normal(N), rng.standard_normal(N)
        lhs = C @ (edge_grad_matrix(cx, e.id, "par") @ a + edge_grad_matrix(cx, e.id, "perp") @ b)
        rhs = mixed_deriv_matrix(cx, e.id) @ (b - a)
        on = np.zeros(layout(cx, 2).total, bool)
        for k in e.patches:
            on[layout(cx, 2).block(k)] = True
        assert np.abs(lhs[on] - rhs[on]).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_star_layout_roundtrip(n, seed):
    from mpfeec.logical import LogicalDeRham
    from mpfeec.univariate import uniform_space

    S = LogicalDeRham(uniform_space(2, n))
    c = np.random.default_rng(seed).standard_normal(S.dims[1])
    assert np.array_equal(from_star(S, to_star(S, c)), c)


def test_unrotate():
    g = unrotate_field(lambda a, b: (a + 0 * b, 2 * b + 0 * a))
    u = g(np.array([1.0]), np.array([3.0]))
    assert np.allclose(u, [[-6.0], [1.0]])


def test_dump_load(tmp_path, cx):
    vec = np.random.default_rng(0).standard_normal(layout(cx, 1).total)
    f = BrokenField.from_vector(cx, 1, vec, certificate={"max_jump": 0.5})
    f.dump(tmp_path / "f")
    g = BrokenField.load(tmp_path / "f")
    assert g.ell == 1 and np.array_equal(g.vector, vec) and g.certificate["max_jump"] == 0.5


def test_dimension_mismatch(cx):
    with pytest.raises(DimensionMismatch):
        BrokenField.from_vector(cx, 0, np.zeros(3))
