import numpy as np
import pytest

from helpers import FIXTURES, fixture_complex
from mpfeec.broken import curl_matrix, div_matrix, grad_matrix, rot_grad_matrix
from mpfeec.errors import WrongSequenceKind
from mpfeec.projections import (
    ProjectionConfig,
    pi0,
    pi0_vector,
    pi1,
    pi1_star_vector,
    pi1_vector,
    pi2,
    pi2_vector,
    pi_star,
    project,
)
from mpfeec.suites import conforming_space, logical_evaluators
from mpfeec.testfunctions import smooth_scalars, smooth_vectors
from mpfeec.topology import CURL_DIV, HOMOGENEOUS

PHI = smooth_scalars()[5]
U = smooth_vectors()[5]


def _rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


@pytest.fixture(scope="module", params=FIXTURES)
def cx(request):
    return fixture_complex(request.param)


def test_commuting_squares(cx):
    assert _rel(grad_matrix(cx) @ pi0_vector(cx, PHI), pi1_vector(cx, PHI.grad)) <= 1e-9
    assert _rel(curl_matrix(cx) @ pi1_vector(cx, U), pi2_vector(cx, U.curl)) <= 1e-9


@pytest.mark.parametrize("name", FIXTURES[:2])
def test_curl_div_squares(name):
    cx = fixture_complex(name, kind=CURL_DIV)
    assert _rel(rot_grad_matrix(cx) @ pi0_vector(cx, PHI), pi1_star_vector(cx, PHI.rot_grad)) <= 1e-9
    assert _rel(div_matrix(cx) @ pi1_star_vector(cx, U), pi2_vector(cx, U.div)) <= 1e-9


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_projection_reproduces_conforming_members(cx, ell):
    fns = {0: pi0_vector, 1: pi1_vector, 2: pi2_vector}
    Q = conforming_space(cx, ell)
    x = Q @ np.random.default_rng(ell).standard_normal(Q.shape[1])
    y = fns[ell](cx, logical_evaluators(cx, ell, x), logical=True)
    assert _rel(y, x) <= 1e-10


def test_homogeneous_mode_reproduces():
    cx = fixture_complex("two_patch_nested", HOMOGENEOUS)
    Q = conforming_space(cx, 1)
    x = Q @ np.random.default_rng(5).standard_normal(Q.shape[1])
    assert _rel(pi1_vector(cx, logical_evaluators(cx, 1, x), logical=True), x) <= 1e-10


@pytest.mark.parametrize("n_avg", [1, 2, 7])
def test_commuting_for_any_averaging(n_avg):
    cx = fixture_complex("square_2x2")
    cfg = ProjectionConfig(n_avg=n_avg)
    assert _rel(grad_matrix(cx) @ pi0_vector(cx, PHI, cfg), pi1_vector(cx, PHI.grad, cfg)) <= 1e-9
    assert _rel(curl_matrix(cx) @ pi1_vector(cx, U, cfg), pi2_vector(cx, U.curl, cfg)) <= 1e-9


def test_fields_and_certificates():
    cx = fixture_complex("two_patch_flipped")
    f1 = pi1(cx, U)
    assert f1.certificate["max_jump"] <= 1e-9
    assert np.allclose(project(cx, 1, U).vector, f1.vector)
    assert np.allclose(pi0(cx, PHI).vector, pi0_vector(cx, PHI))
    assert np.allclose(pi2(cx, U.curl).vector, pi2_vector(cx, U.curl))


def test_pi_star():
    cx = fixture_complex("two_patch_nested", kind=CURL_DIV)
    f1 = pi_star(cx, 1, U)
    assert f1.certificate["max_jump"] <= 1e-9
    assert np.allclose(f1.vector, pi1_star_vector(cx, U))
    assert np.allclose(project(cx, 0, PHI).vector, pi0_vector(cx, PHI))
    with pytest.raises(ValueError):
        pi_star(cx, 3, U)


def test_wrong_sequence_kind():
    with pytest.raises(WrongSequenceKind):
        pi1(fixture_complex("two_patch_nested", kind=CURL_DIV), U)
    with pytest.raises(WrongSequenceKind):
        pi_star(fixture_complex("two_patch_nested"), 1, U)
