import numpy as np
import pytest

from helpers import FIXTURES, fixture_complex
from mpfeec import antiderivatives as ad
from mpfeec.topology import HOMOGENEOUS
from mpfeec.testfunctions import smooth_scalars, smooth_vectors

CASES = [(n, m) for n in FIXTURES for m in (None, HOMOGENEOUS)] + [("l_shape", None)]
PHI = smooth_scalars()[7]
U = smooth_vectors()[5]
# non-polynomial integrands on curved patches are integrated to quadrature accuracy only
QUAD = 1e-10


@pytest.fixture(scope="module", params=CASES, ids=lambda c: f"{c[0]}-{c[1] or 'default'}")
def cx(request):
    return fixture_complex(*request.param)


def _points(rng, m=12):
    return rng.uniform(0.0, 1.0, m), rng.uniform(0.0, 1.0, m)


def _closed(plan):
    L = plan.loops
    return ad.CurvePlan(plan.chart, np.concatenate([L, L[:, :1]], axis=1))


def _exact_difference(cx, plan):
    P = plan.physical(cx)
    return PHI(P[:, -1, 0], P[:, -1, 1]) - PHI(P[:, 0, 0], P[:, 0, 1])


def _curve_plans(cx, rng):
    for e in cx.edges:
        for k in e.patches:
            x1, x2 = _points(rng)
            a = rng.uniform(0, 1, x1.size) * cx.h_edge(e.id)
            yield ad.edge_parallel_plan(cx, e.id, k, x1, x2)
            yield ad.edge_perp_plan(cx, e.id, k, x1, x2, a)
            yield ad.edge_closing_plan(cx, e.id, k, x1, x2, a)
    for v in cx.vertices:
        for k in v.patch_ids:
            x1, x2 = _points(rng)
            yield ad.vertex_plan(cx, v.id, k, x1, x2, rng.uniform(0, 1, x1.size) * cx.h_vertex(v.id))


def _surface_plans(cx, rng):
    for e in cx.edges:
        for k in e.patches:
            x1, x2 = _points(rng)
            yield ad.edge_surface_plan(cx, e.id, k, x1, x2, rng.uniform(0, 1, x1.size) * cx.h_edge(e.id))
    for v in cx.vertices:
        for e in v.edges:
            for k in cx.edges[e].patches:
                x1, x2 = _points(rng)
                s = rng.uniform(0, 1, x1.size)
                yield ad.edge_vertex_surface_plan(cx, e, v.id, k, x1, x2,
                                                  s * cx.h_edge(e), s * cx.h_vertex(v.id))


def test_gradient_path_integrals(cx):
    fi = ad.integrals(cx, 1, PHI.grad)
    rng = np.random.default_rng(0)
    for plan in _curve_plans(cx, rng):
        got = ad.integrate_curves(fi, plan)
        assert np.allclose(got, _exact_difference(cx, plan), atol=QUAD)


def test_closed_loops_of_gradients_vanish(cx):
    fi = ad.integrals(cx, 1, PHI.grad)
    for plan in _surface_plans(cx, np.random.default_rng(1)):
        assert np.abs(ad.integrate_curves(fi, _closed(plan))).max() <= QUAD


def test_stokes(cx):
    f1 = ad.integrals(cx, 1, U)
    f2 = ad.integrals(cx, 2, U.curl)
    for plan in _surface_plans(cx, np.random.default_rng(2)):
        surf = ad.integrate_surfaces(f2, plan)
        circ = ad.integrate_curves(f1, _closed(plan))
        assert np.allclose(surf, circ, atol=QUAD)


def test_patch_antiderivatives(cx):
    rng = np.random.default_rng(3)
    h = 1e-6
    for p in cx.patches[:2]:
        x1, x2 = rng.uniform(0.1, 0.9, (2, 10))
        for d in (1, 2):
            phi = ad.phi_patch(cx, p.id, d, U)
            g = ad.integrals(cx, 1, U).fields[p.id](x1, x2)[d - 1]
            if d == 1:
                fd = (phi(p.id, x1 + h, x2) - phi(p.id, x1 - h, x2)) / (2 * h)
            else:
                fd = (phi(p.id, x1, x2 + h) - phi(p.id, x1, x2 - h)) / (2 * h)
            assert np.allclose(fd, g, atol=1e-7)
        psi = ad.psi_patch(cx, p.id, U.curl)
        dens = ad.integrals(cx, 2, U.curl).fields[p.id]
        mixed = (psi(p.id, x1 + h, x2 + h) - psi(p.id, x1 + h, x2 - h)
                 - psi(p.id, x1 - h, x2 + h) + psi(p.id, x1 - h, x2 - h)) / (4 * h * h)
        assert np.allclose(mixed, dens(x1, x2), rtol=1e-4, atol=1e-4)


def test_antiderivatives_of_gradients(cx):
    # antiderivatives whose curves share a start point differ from phi by a constant;
    # curves starting at a boundary foot point are covered by the plan tests
    rng = np.random.default_rng(4)
    u = PHI.grad
    evs = []
    for e in cx.edges:
        if e.minus is not None:
            evs.append(ad.phi_edge_perp(cx, e.id, u))
    for v in cx.vertices:
        if all(r.start_edge is not None for r in ad.build_vertex_curves(cx, v.id).rules):
            evs.append(ad.phi_vertex(cx, v.id, u))
    for ev in evs:
        for k in ev.patches:
            x1, x2 = _points(rng)
            F = cx.patches[k].mapping
            d = ev(k, x1, x2) - PHI(*F(x1, x2))
            assert np.ptp(d) <= 1e-11


def test_corner_integral():
    cx = fixture_complex("two_patch_nested")
    fi = ad.integrals(cx, 2, lambda a, b: a * a * b + 0 * a, logical=True)
    y1, y2 = np.array([0.3, 0.7, 1.0]), np.array([0.5, 0.2, 1.0])
    assert np.allclose(fi.corner(0, y1, y2), y1 ** 3 / 3 * y2 ** 2 / 2, atol=1e-15)
    assert np.allclose(fi.box(0, 0.2, 0.3, 0.1, 0.5), (0.3 ** 3 - 0.2 ** 3) / 3 * (0.25 - 0.01) / 2)


def test_average_nodes():
    s, w = ad.average_nodes(5)
    assert np.isclose(w.sum(), 1.0) and np.all((s > 0) & (s < 1))
