"""Commuting projections onto the conforming multipatch spaces.

Each projection is the patch-wise projection plus local corrections of the
form  (derivative) (conforming - broken local projector) Pi^0_pw (antiderivative).
The local projectors only read edge or corner coefficients, so Pi^0_pw of an
antiderivative is evaluated only on the dual points those coefficients need.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import antiderivatives as ad
from .broken import (
    BrokenField,
    edge_grad_matrix,
    grad_matrix,
    layout,
    mixed_deriv_matrix,
    normal_jump,
    project_pw,
    star_matrix,
    tangential_jump,
    unrotate_field,
    value_jump,
)
from .conforming import conforming_layer, conformity_certificate
from .errors import WrongSequenceKind
from .geometry import pullback
from .logical import flat, project1_logical, project2_logical
from .topology import CURL_DIV, GRAD_CURL


@dataclass(frozen=True)
class ProjectionConfig:
    """Quadrature points per cell (None: degree + 3) and averaging nodes (None: degree + 3)."""
    q: int | None = None
    n_avg: int | None = None
    samples: int = 33

    def navg(self, cx):
        return self.n_avg or ad.default_n_avg(cx)


DEFAULT = ProjectionConfig()


def pw_partial(cx, ev, cols):
    """Pi^0_pw of an antiderivative, computed only for the global coefficients in cols."""
    lay = layout(cx, 0)
    out = np.zeros(lay.total)
    cols = np.unique(np.asarray(cols, dtype=int))
    for k in ev.patches:
        sl = lay.block(k)
        mine = cols[(cols >= sl.start) & (cols < sl.stop)] - sl.start
        if mine.size == 0:
            continue
        S = cx.patches[k].spaces
        m = S.n + 1
        i1, i2 = mine % m, mine // m
        Dm = S.dual.matrix
        r1, r2 = np.unique(i1), np.unique(i2)
        p1 = np.nonzero(np.abs(Dm[r1]).max(axis=0) > 0)[0]
        p2 = np.nonzero(np.abs(Dm[r2]).max(axis=0) > 0)[0]
        pts = S.dual.points
        X1, X2 = np.meshgrid(pts[p1], pts[p2], indexing="ij")
        F = ev.logical(k, X1, X2)
        C = Dm[np.ix_(r1, p1)] @ F @ Dm[np.ix_(r2, p2)].T
        a = np.searchsorted(r1, i1)
        b = np.searchsorted(r2, i2)
        out[sl.start + mine] = C[a, b]
    return out


def _cols(M):
    return np.unique(M.tocoo().col)


def _covariant(cx, ell, f):
    return [pullback(ell, p.mapping, f) for p in cx.patches]


def pi0_vector(cx, phi, cfg=DEFAULT, logical=False):
    f0 = project_pw(cx, 0, phi, cfg.q, logical)
    return conforming_layer(cx).P @ f0.vector


def pi0(cx, phi, cfg=DEFAULT, logical=False):
    """Conforming projection of the patch-wise projection."""
    out = BrokenField.from_vector(cx, 0, pi0_vector(cx, phi, cfg, logical))
    out.certificate = conformity_certificate(cx, out, cfg.samples)
    return out


def _edge_pairs(cx):
    return [(e, v.id) for v in cx.vertices for e in v.edges]


def pi1_vector(cx, u, cfg=DEFAULT, logical=False):
    """Coefficients of the grad-curl 1-form projection of a covariant field u."""
    L = conforming_layer(cx)
    fields = u if logical else _covariant(cx, 1, u)
    fi = ad.integrals(cx, 1, fields, cfg.q, logical=True)
    n_avg = cfg.navg(cx)
    out = np.concatenate([project1_logical(p.spaces, g, cfg.q) for p, g in zip(cx.patches, fields)])

    perp, vert = {}, {}

    def phi_perp(e, cols):
        if e not in perp:
            need = _cols(L.projector("Pe", e) - L.projector("Ie", e))
            perp[e] = pw_partial(cx, ad.phi_edge_perp(cx, e, fi, n_avg), need)
        return perp[e]

    def phi_vert(v):
        if v not in vert:
            need = [_cols(L.projector("Pv", v) - L.projector("IbarV", v))]
            for e in cx.vertices[v].edges:
                need.append(_cols(L.projector("IbarEv", (e, v)) - L.projector("Pev", (e, v))))
            vert[v] = pw_partial(cx, ad.phi_vertex(cx, v, fi, n_avg), np.concatenate(need))
        return vert[v]

    for e in cx.edges:
        D = L.projector("Pe", e.id) - L.projector("Ie", e.id)
        if D.nnz == 0:
            continue
        c_par = pw_partial(cx, ad.phi_edge_parallel(cx, e.id, fi), _cols(D))
        out += edge_grad_matrix(cx, e.id, "par") @ (D @ c_par)
        out += edge_grad_matrix(cx, e.id, "perp") @ (D @ phi_perp(e.id, None))
    G = grad_matrix(cx)
    for v in cx.vertices:
        D = L.projector("Pv", v.id) - L.projector("IbarV", v.id)
        if D.nnz:
            out += G @ (D @ phi_vert(v.id))
    for e, v in _edge_pairs(cx):
        D = L.projector("IbarEv", (e, v)) - L.projector("Pev", (e, v))
        if D.nnz == 0:
            continue
        out += edge_grad_matrix(cx, e, "par") @ (D @ phi_vert(v))
        out += edge_grad_matrix(cx, e, "perp") @ (D @ phi_perp(e, None))
    return out


def pi2_vector(cx, f, cfg=DEFAULT, logical=False):
    """Coefficients of the 2-form projection."""
    L = conforming_layer(cx)
    fields = f if logical else _covariant(cx, 2, f)
    fi = ad.integrals(cx, 2, fields, cfg.q, logical=True)
    n_avg = cfg.navg(cx)
    out = np.concatenate([project2_logical(p.spaces, g, cfg.q) for p, g in zip(cx.patches, fields)])
    for e in cx.edges:
        D = L.projector("Pe", e.id) - L.projector("Ie", e.id)
        if D.nnz == 0:
            continue
        c = pw_partial(cx, ad.psi_edge(cx, e.id, fi, n_avg), _cols(D))
        out += mixed_deriv_matrix(cx, e.id) @ (D @ c)
    for e, v in _edge_pairs(cx):
        D = L.projector("IbarEv", (e, v)) - L.projector("Pev", (e, v))
        if D.nnz == 0:
            continue
        c = pw_partial(cx, ad.psi_edge_vertex(cx, e, v, fi, n_avg), _cols(D))
        out += mixed_deriv_matrix(cx, e) @ (D @ c)
    return out


def _require(cx, kind):
    if cx.sequence_kind != kind:
        raise WrongSequenceKind(f"complex is {cx.sequence_kind}, operation needs {kind}")


def tangential_certificate(cx, f1, samples=33):
    jumps = [tangential_jump(cx, e.id, f1, samples) for e in cx.edges
             if not e.boundary or cx.homogeneous]
    return {"max_jump": max(jumps, default=0.0)}


def pi1(cx, u, cfg=DEFAULT, logical=False):
    _require(cx, GRAD_CURL)
    out = BrokenField.from_vector(cx, 1, pi1_vector(cx, u, cfg, logical))
    out.certificate = tangential_certificate(cx, out, cfg.samples)
    return out


def pi2(cx, f, cfg=DEFAULT, logical=False):
    return BrokenField.from_vector(cx, 2, pi2_vector(cx, f, cfg, logical))


def rotate_vector(cx, vec):
    """V^1 coefficients (grad-curl layout) to the rotated layout, patch by patch."""
    lay = layout(cx, 1)
    return np.concatenate([star_matrix(p.spaces) @ vec[lay.block(p.id)] for p in cx.patches])


def pi1_star_vector(cx, u, cfg=DEFAULT):
    """R Pi^1 R^-1 u for a physical vector field u."""
    return rotate_vector(cx, pi1_vector(cx, unrotate_field(u), cfg))


def pi_star(cx, ell, f, cfg=DEFAULT):
    """Projections of the curl-div sequence; the 1-form one is conjugated by the rotation."""
    _require(cx, CURL_DIV)
    if ell == 0:
        return pi0(cx, f, cfg)
    if ell == 2:
        return pi2(cx, f, cfg)
    if ell != 1:
        raise ValueError("form degree must be 0, 1 or 2")
    out = BrokenField.from_vector(cx, 1, pi1_star_vector(cx, f, cfg))
    jumps = [normal_jump(cx, e.id, out, cfg.samples) for e in cx.edges
             if not e.boundary or cx.homogeneous]
    out.certificate = {"max_jump": max(jumps, default=0.0)}
    return out


def project(cx, ell, f, cfg=DEFAULT):
    """Dispatch on the sequence kind of the complex."""
    if cx.sequence_kind == CURL_DIV:
        return pi_star(cx, ell, f, cfg)
    return (pi0, pi1, pi2)[ell](cx, f, cfg)


__all__ = ["ProjectionConfig", "pi0", "pi1", "pi2", "pi_star", "project", "pw_partial",
           "pi0_vector", "pi1_vector", "pi2_vector", "pi1_star_vector", "value_jump", "flat"]
