import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import FIXTURES, fixture_complex
from mpfeec.broken import BrokenField, layout, value_jump
from mpfeec.conforming import (
    KINDS,
    conforming_basis,
    conforming_layer,
    conforming_P,
    extension_domain,
    local_projector,
    neighborhood,
)
from mpfeec.errors import InvalidSequences, InvalidTarget, RegionOutsideNeighborhood
from mpfeec.suites import conforming_space
from mpfeec.topology import HOMOGENEOUS

CASES = [(n, None) for n in FIXTURES] + [(n, HOMOGENEOUS) for n in FIXTURES] + \
    [("l_shape", None), ("l_shape_homogeneous", None)]


@pytest.fixture(scope="module", params=CASES, ids=lambda c: f"{c[0]}-{c[1] or 'default'}")
def cx(request):
    return fixture_complex(*request.param)


def test_basis_spans_conforming_space(cx):
    _, B = conforming_basis(cx)
    Q = conforming_space(cx, 0)
    assert B.shape[1] == Q.shape[1]
    Bd = B.toarray()
    assert np.linalg.matrix_rank(Bd) == B.shape[1]
    resid = Bd - Q @ (Q.T @ Bd)
    assert np.abs(resid).max() <= 1e-10


def test_P_projects(cx):
    L = conforming_layer(cx)
    P = L.P
    _, B = L.basis
    assert abs(P @ P - P).max() <= 1e-13
    assert abs(P @ B - B).max() <= 1e-13


def test_structural_identities(cx):
    L = conforming_layer(cx)
    N = L.N
    Z = sp.csr_matrix((N, N))
    dec = sum((L.projector("Ik0", p.id) for p in cx.patches), Z) \
        + sum((L.projector("Ie0", e.id) for e in cx.edges), Z) \
        + sum((L.projector("Iv", v.id) for v in cx.vertices), Z)
    assert abs(dec - sp.identity(N)).max() <= 1e-13
    for v in cx.vertices:
        sumI = sum(L.projector("Iev", (e, v.id)) for e in v.edges)
        if not v.boundary:
            assert abs(sumI - 2 * L.projector("Iv", v.id)).max() <= 1e-13
        sumB = sum(L.projector("IbarEv", (e, v.id)) for e in v.edges)
        assert abs(L.projector("IbarV", v.id) - (sumB - L.projector("Iv", v.id))).max() <= 1e-13


@given(st.integers(0, 2**31))
@settings(max_examples=10)
def test_P_range_continuous(seed):
    for name in FIXTURES:
        for mode in (None, HOMOGENEOUS):
            cx = fixture_complex(name, mode)
            x = np.random.default_rng(seed).standard_normal(layout(cx, 0).total)
            f = conforming_P(cx, BrokenField.from_vector(cx, 0, x))
            assert f.certificate["max_jump"] <= 1e-12 * np.abs(x).max() * 10
            for e in cx.edges:
                if e.boundary and mode == HOMOGENEOUS:
                    assert value_jump(cx, e.id, f) <= 1e-12


def test_local_projectors_are_projections():
    cx = fixture_complex("square_2x2")
    for kind in KINDS:
        targets = {"Ik0": [p.id for p in cx.patches],
                   "Iv": [v.id for v in cx.vertices], "Pv": [v.id for v in cx.vertices],
                   "IbarV": [v.id for v in cx.vertices]}.get(kind)
        if targets is None and kind in ("Iev", "Pev", "IbarEv"):
            targets = [(e, v.id) for v in cx.vertices for e in v.edges]
        if targets is None:
            targets = [e.id for e in cx.edges]
        for t in targets:
            M = local_projector(cx, kind, t)
            if kind in ("Pv", "IbarV"):
                continue
            assert abs(M @ M - M).max() <= 1e-13, (kind, t)


def test_invalid_target():
    cx = fixture_complex("two_patch_nested")
    with pytest.raises(InvalidTarget):
        local_projector(cx, "Iq", 0)
    with pytest.raises(InvalidTarget):
        local_projector(cx, "Ie", 99)
    e = cx.edges[0]
    other = next(v for v in range(len(cx.vertices)) if v not in e.vertices)
    with pytest.raises(InvalidTarget):
        local_projector(cx, "Iev", (e.id, other))


def test_invalid_sequences():
    cx = fixture_complex("l_shape", HOMOGENEOUS)
    with pytest.raises(InvalidSequences):
        conforming_layer(cx)


def test_extensions():
    cx = fixture_complex("two_patch_nested")
    inner = next(e for e in cx.edges if not e.boundary)
    with pytest.raises(RegionOutsideNeighborhood):
        extension_domain(cx, "patch", 0, {1: ((0.0, 0.1), (0.0, 0.1))})
    with pytest.raises(RegionOutsideNeighborhood):
        extension_domain(cx, "patch", 0, {0: ((0.0, 1.5), (0.0, 0.1))})
    box = {0: ((0.4, 0.5), (0.4, 0.5))}
    ext = extension_domain(cx, "patch", 0, box)
    (a1, b1), (a2, b2) = ext[0]
    assert a1 <= 0.4 and b1 >= 0.5 and a2 <= 0.4 and b2 >= 0.5
    k = inner.sides[0].patch
    near = {k: ((0.0, 1.0), (0.0, 1.0))}
    ee = extension_domain(cx, "edge", inner.id, near)
    assert set(ee) == set(inner.patches)
    small = {0: ((0.45, 0.55), (0.45, 0.55))}
    n1, n3 = neighborhood(cx, small, 1), neighborhood(cx, small, 3)
    for k, ((a1, b1), (a2, b2)) in n1.items():
        (c1, d1), (c2, d2) = n3[k]
        assert c1 <= a1 and d1 >= b1 and c2 <= a2 and d2 >= b2
