"""Verification suites run by the command line tool.

Every suite appends named checks (measured value, tolerance, verdict) to a
report.  Suites that need a particular sequence kind build it from the
scenario geometry, so one scenario drives both sequences.
"""
from __future__ import annotations

import csv
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
import scipy.sparse as sp
import scipy.sparse.linalg  # noqa: F401
from scipy.linalg import null_space
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from . import _kernels
from .broken import (
    BrokenField,
    chebyshev,
    curl_matrix,
    div_matrix,
    edge_grad_matrix,
    edge_points,
    eval_logical,
    grad_matrix,
    layout,
    mixed_deriv_matrix,
    project_pw,
    rot_grad_matrix,
    unrotate_field,
)
from .conforming import conforming_layer, neighborhood
from .errors import MpfeecError, SolverFailure
from .geometry import _det, _inv, lp_norms, pullback
from .projections import (
    pi0_vector,
    pi1_star_vector,
    pi1_vector,
    pi2_vector,
    project,
    rotate_vector,
)
from .testfunctions import VectorField, smooth_set, stress_set
from .topology import CURL_DIV, GRAD_CURL, validate_assumptions
from .univariate import gauss_on

log = logging.getLogger("mpfeec")


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    detail: str = ""


@dataclass
class SuiteReport:
    scenario: str
    level: int
    seed: int
    checks: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, value, tol, detail=""):
        value = float(value)
        ok = bool(np.isfinite(value) and value <= tol)
        self.checks.append(Check(name, value, float(tol), ok, detail))
        log.info("%s %s value=%.3e tol=%.1e %s", "PASS" if ok else "FAIL", name, value, tol, detail)
        return ok

    def fail(self, name, detail):
        self.checks.append(Check(name, float("nan"), 0.0, False, detail))
        log.warning("FAIL %s %s", name, detail)

    def to_dict(self):
        return {"scenario": self.scenario, "level": self.level, "seed": self.seed,
                "passed": self.passed, "n_checks": len(self.checks),
                "checks": [asdict(c) for c in self.checks], "tables": self.tables,
                "timing": self.timing, "environment": self.environment}

    def write(self, out):
        """JSON report, CSV tables and whitespace-delimited plot data."""
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.to_dict(), indent=2, default=_jsonable))
        with open(out / "checks.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "value", "tol", "passed", "detail"])
            for c in self.checks:
                w.writerow([c.name, repr(c.value), repr(c.tol), int(c.passed), c.detail])
        for name, tab in self.tables.items():
            with open(out / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(tab["columns"])
                w.writerows(tab["rows"])
            with open(out / f"{name}.dat", "w") as fh:
                fh.write("# " + " ".join(tab["columns"]) + "\n")
                for r in tab["rows"]:
                    fh.write(" ".join(str(x) for x in r) + "\n")
        return out


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def environment():
    import warnings

    import numba

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        threads = numba.get_num_threads()
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "backend": _kernels.backend(),
            "threads": threads, "platform": platform.platform()}


class Context:
    """Scenario, level, seeded generator and cached complexes per sequence kind."""

    def __init__(self, scenario, level, report, seed=None):
        self.sc = scenario
        self.level = level
        self.report = report
        self.rng = np.random.default_rng(scenario.seed if seed is None else seed)
        self._cx = {}

    def cx(self, kind=None, level=None):
        key = (kind or self.sc.sequence_kind, self.level if level is None else level)
        if key not in self._cx:
            self._cx[key] = self.sc.build(key[1], sequence_kind=key[0])
        return self._cx[key]


def _rel(a, b):
    d = float(np.abs(a - b).max()) if np.size(a) else 0.0
    s = float(np.abs(b).max()) if np.size(b) else 0.0
    return d / s if s > 0 else d


def logical_evaluators(cx, ell, vec):
    """Per-patch logical evaluators of broken coefficients."""
    f = BrokenField.from_vector(cx, ell, vec)
    return [(lambda k: (lambda x1, x2: eval_logical(cx, f, k, x1, x2)))(p.id) for p in cx.patches]


# Independent conformity constraints: traces sampled at enough Gauss points per
# cell of the union of both side partitions that equal samples mean equal traces.

def _edge_samples(cx, e):
    edge = cx.edges[e]
    b = [0.0, 1.0]
    p = 1
    for s in edge.sides:
        sp_ = cx.patches[s.patch].space
        z = sp_.breakpoints
        b.extend(z)
        b.extend(1.0 - z)
        p = max(p, sp_.degree)
    b = np.unique(np.round(b, 14))
    x, _ = gauss_on(b[:-1], b[1:], p + 2)
    return x.ravel()


def _point_rows(S1, S2, x1, x2):
    B1 = S1.basis_matrix(x1)
    B2 = S2.basis_matrix(x2)
    return (B2[:, :, None] * B1[:, None, :]).reshape(len(x1), -1)


def trace_rows(cx, ell, e, k, t):
    """Rows mapping patch-k coefficients of an ell-form to its conformity trace on edge e."""
    edge = cx.edges[e]
    s = edge.side_of(k)
    S = cx.patches[k].spaces
    x1, x2 = edge_points(cx, e, k, t)
    if ell == 0:
        return _point_rows(S.space, S.space, x1, x2)
    n = S.n
    m = n * (n + 1)
    star = cx.sequence_kind == CURL_DIV
    out = np.zeros((len(t), 2 * m))
    if star:
        axis = s.perp_axis
        sign = 1.0 if s.e_perp == 1 else -1.0
        spaces = [(S.space, S.dspace), (S.dspace, S.space)][axis]
    else:
        axis = s.par_axis
        sign = -1.0 if (edge.flip and s is not edge.ref) else 1.0
        spaces = [(S.dspace, S.space), (S.space, S.dspace)][axis]
    out[:, axis * m:(axis + 1) * m] = sign * _point_rows(*spaces, x1, x2)
    return out


def constraint_matrix(cx, ell):
    """Dense constraints whose null space is the conforming subspace of V^ell_pw."""
    lay = layout(cx, ell)
    rows = []
    for e in cx.edges:
        if e.boundary and not cx.homogeneous:
            continue
        t = _edge_samples(cx, e.id)
        blocks = []
        for i, s in enumerate(e.sides):
            R = np.zeros((len(t), lay.total))
            R[:, lay.block(s.patch)] = trace_rows(cx, ell, e.id, s.patch, t)
            blocks.append(R)
        if e.boundary:
            rows.append(blocks[0])
        elif cx.sequence_kind == CURL_DIV and ell == 1:
            rows.append(blocks[0] + blocks[1])
        else:
            rows.append(blocks[0] - blocks[1])
    return np.vstack(rows) if rows else np.zeros((0, lay.total))


def conforming_space(cx, ell):
    """Orthonormal basis (columns) of V^ell_h inside the broken coefficient space."""
    if ell == 2:
        return np.eye(layout(cx, 2).total)
    return null_space(constraint_matrix(cx, ell), rcond=1e-10)


def _jump(cx, ell, vec):
    A = constraint_matrix(cx, ell)
    return float(np.abs(A @ vec).max()) if A.size else 0.0


# Suites.

def suite_validate(ctx):
    r = ctx.report
    try:
        cx = ctx.cx()
    except MpfeecError as exc:
        r.fail("validate.build", f"{type(exc).__name__}: {exc}")
        return False
    r.add("validate.build", 0, 0)
    rep = validate_assumptions(cx)
    r.add("validate.assumptions", len(rep.violations), 0, "; ".join(rep.violations))
    r.tables["topology"] = {"columns": ["kind", "id", "boundary", "patches", "detail"],
                            "rows": [["edge", e["id"], int(e["boundary"]), "", e.get("H_ratio", "")]
                                     for e in rep.edges]
                            + [["vertex", v["id"], int(not v["interior"]), v["patches"], v["sequences"]]
                               for v in rep.vertices]}
    if not rep.valid:
        return False
    L = conforming_layer(cx)
    _, B = L.basis
    ref = conforming_space(cx, 0).shape[1]
    r.add("validate.embedding_rank", abs(np.linalg.matrix_rank(B.toarray()) - B.shape[1]), 0)
    r.add("validate.conforming_dim", abs(B.shape[1] - ref), 0,
          f"basis {B.shape[1]}, constraint null space {ref}")
    return True


def suite_conform(ctx):
    r = ctx.report
    cx = ctx.cx(GRAD_CURL)
    L = conforming_layer(cx)
    tol = ctx.sc.tol("structure")
    P = L.P
    _, B = L.basis
    r.add("conform.P_idempotent", abs(P @ P - P).max(), tol)
    r.add("conform.P_reproduces_basis", abs(P @ B - B).max(), tol)
    N = L.N
    dec = sum((L.projector("Ik0", p.id) for p in cx.patches), sp.csr_matrix((N, N)))
    dec = dec + sum((L.projector("Ie0", e.id) for e in cx.edges), sp.csr_matrix((N, N)))
    dec = dec + sum((L.projector("Iv", v.id) for v in cx.vertices), sp.csr_matrix((N, N)))
    f0 = ctx.rng.standard_normal(N)
    r.add("conform.broken_decomposition", np.abs(dec @ f0 - f0).max(), tol)
    s_int, s_bar = 0.0, 0.0
    for v in cx.vertices:
        sumI = sum(L.projector("Iev", (e, v.id)) for e in v.edges)
        if not v.boundary:
            s_int = max(s_int, abs(sumI - 2 * L.projector("Iv", v.id)).max())
        sumB = sum(L.projector("IbarEv", (e, v.id)) for e in v.edges)
        s_bar = max(s_bar, abs(L.projector("IbarV", v.id) - (sumB - L.projector("Iv", v.id))).max())
    r.add("conform.sum_edge_vertex_projectors", s_int, tol)
    r.add("conform.vertex_basis_from_edges", s_bar, tol)
    C = curl_matrix(cx)
    worst = 0.0
    for e in cx.edges:
        mask = np.zeros(N)
        for k in e.patches:
            mask[layout(cx, 0).block(k)] = 1.0
        a, b = mask * ctx.rng.standard_normal(N), mask * ctx.rng.standard_normal(N)
        lhs = C @ (edge_grad_matrix(cx, e.id, "par") @ a + edge_grad_matrix(cx, e.id, "perp") @ b)
        worst = max(worst, _rel(lhs, mixed_deriv_matrix(cx, e.id) @ (b - a)))
    r.add("conform.mixed_derivative_identity", worst, ctx.sc.tol("d2e"))
    c = B @ ctx.rng.standard_normal(B.shape[1])
    r.add("conform.basis_continuity", _jump(cx, 0, c) / np.abs(c).max(), ctx.sc.tol("conform"))
    x = P @ ctx.rng.standard_normal(N)
    r.add("conform.P_range_continuity", _jump(cx, 0, x) / np.abs(x).max(), ctx.sc.tol("conform"))


def suite_project(ctx, members=20):
    r = ctx.report
    cx = ctx.cx()
    tol = ctx.sc.tol("project")
    fns = {0: pi0_vector, 1: pi1_vector, 2: pi2_vector}
    for ell in (0, 1, 2):
        Q = conforming_space(cx, ell)
        worst = 0.0
        idem = 0.0
        for _ in range(members):
            x = Q @ ctx.rng.standard_normal(Q.shape[1])
            f = logical_evaluators(cx, ell, x)
            y = _apply_logical(cx, ell, f, fns)
            worst = max(worst, _rel(y, x))
        r.add(f"project.reproduce[{ell}]", worst, tol, f"{members} random members")
        f = logical_evaluators(cx, ell, ctx.rng.standard_normal(layout(cx, ell).total))
        y = _apply_logical(cx, ell, f, fns)
        z = _apply_logical(cx, ell, logical_evaluators(cx, ell, y), fns)
        idem = _rel(z, y)
        r.add(f"project.idempotent[{ell}]", idem, tol)


def _apply_logical(cx, ell, f, fns):
    if cx.sequence_kind == CURL_DIV and ell == 1:
        g = [unrotate_field(h) for h in f]
        return rotate_vector(cx, pi1_vector(cx, g, logical=True))
    return fns[ell](cx, f, logical=True)


def _commute_gc(ctx, cx, tol, tag):
    r = ctx.report
    G, C = grad_matrix(cx), curl_matrix(cx)
    g_worst = c_worst = 0.0
    j0 = j1 = 0.0
    for phi in smooth_set(cx, "scalar"):
        c0 = pi0_vector(cx, phi)
        c1 = pi1_vector(cx, phi.grad)
        if np.abs(c1).max() > 0:
            g_worst = max(g_worst, _rel(G @ c0, c1))
        j0 = max(j0, _jump(cx, 0, c0) / max(np.abs(c0).max(), 1e-300))
    for u in smooth_set(cx, "vector"):
        c1 = pi1_vector(cx, u)
        c2 = pi2_vector(cx, u.curl)
        if np.abs(c2).max() > 0:
            c_worst = max(c_worst, _rel(C @ c1, c2))
        j1 = max(j1, _jump(cx, 1, c1) / max(np.abs(c1).max(), 1e-300))
    r.add(f"{tag}.grad_square", g_worst, tol)
    r.add(f"{tag}.curl_square", c_worst, tol)
    r.add(f"{tag}.pi0_continuity", j0, ctx.sc.tol("conform"))
    r.add(f"{tag}.pi1_tangential_continuity", j1, ctx.sc.tol("conform"))


def _commute_cd(ctx, cx, tol, tag):
    r = ctx.report
    RG, D = rot_grad_matrix(cx), div_matrix(cx)
    g_worst = d_worst = j1 = 0.0
    for phi in smooth_set(cx, "scalar"):
        c0 = pi0_vector(cx, phi)
        c1 = pi1_star_vector(cx, phi.rot_grad)
        if np.abs(c1).max() > 0:
            g_worst = max(g_worst, _rel(RG @ c0, c1))
    for u in smooth_set(cx, "vector"):
        c1 = pi1_star_vector(cx, u)
        c2 = pi2_vector(cx, u.div)
        if np.abs(c2).max() > 0:
            d_worst = max(d_worst, _rel(D @ c1, c2))
        j1 = max(j1, _jump(cx, 1, c1) / max(np.abs(c1).max(), 1e-300))
    r.add(f"{tag}.rot_grad_square", g_worst, tol)
    r.add(f"{tag}.div_square", d_worst, tol)
    r.add(f"{tag}.pi1_normal_continuity", j1, ctx.sc.tol("conform"))


def suite_commute(ctx):
    cx = ctx.cx()
    if cx.sequence_kind == CURL_DIV:
        _commute_cd(ctx, cx, ctx.sc.tol("commute"), "commute")
    else:
        _commute_gc(ctx, cx, ctx.sc.tol("commute"), "commute")


def _random_vector(rng, pool):
    w = rng.standard_normal(len(pool))
    return VectorField("random",
                       lambda x, y: sum(float(a) * f.e1(x, y) for a, f in zip(w, pool)),
                       lambda x, y: sum(float(a) * f.e2(x, y) for a, f in zip(w, pool)))


def suite_rotate(ctx, inputs=10):
    r = ctx.report
    cd = ctx.cx(CURL_DIV)
    gc = ctx.cx(GRAD_CURL)
    _commute_cd(ctx, cd, ctx.sc.tol("commute"), "rotate")
    pool = smooth_set(gc, "vector")
    worst = 0.0
    for _ in range(inputs):
        u = _random_vector(ctx.rng, pool)
        a = project(cd, 1, u).vector
        b = rotate_vector(gc, pi1_vector(gc, unrotate_field(u)))
        worst = max(worst, _rel(a, b))
    r.add("rotate.conjugation_identity", worst, ctx.sc.tol("rotate"), f"{inputs} random inputs")


def _bump(lo, hi):
    def f(s):
        z = (s - lo) / (hi - lo)
        inside = (z > 0) & (z < 1)
        return np.where(inside, (z * (1 - z)) ** 2, 0.0) * 16.0
    return f


def _cell_input(cx, ell, k, box):
    (a1, b1), (a2, b2) = box
    f1, f2 = _bump(a1, b1), _bump(a2, b2)
    zero = lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape)

    def g(x1, x2):
        v = f1(np.asarray(x1)) * f2(np.asarray(x2))
        return (v, -0.5 * v) if ell == 1 else v

    zf = (lambda x1, x2: (zero(x1, x2), zero(x1, x2))) if ell == 1 else zero
    return [g if p.id == k else zf for p in cx.patches]


def _support_boxes(cx, ell):
    """Logical support box of every broken coefficient, as (patch, lo1, hi1, lo2, hi2) arrays."""
    out = []
    for p in cx.patches:
        S = p.spaces
        s0, s1 = S.space.supports(), S.dspace.supports()
        if ell == 0:
            comps = [(s0, s0)]
        elif ell == 2:
            comps = [(s1, s1)]
        elif cx.sequence_kind == CURL_DIV:
            comps = [(s0, s1), (s1, s0)]
        else:
            comps = [(s1, s0), (s0, s1)]
        for A, Bs in comps:
            i1, i2 = np.meshgrid(np.arange(len(A)), np.arange(len(Bs)), indexing="ij")
            i1, i2 = i1.ravel(order="F"), i2.ravel(order="F")
            out.append(np.column_stack([np.full(i1.size, p.id), A[i1, 0], A[i1, 1],
                                        Bs[i2, 0], Bs[i2, 1]]))
    return np.vstack(out)


def outside_mask(cx, ell, region, tol=1e-12):
    """True for coefficients whose support has no interior overlap with the region."""
    boxes = _support_boxes(cx, ell)
    inside = np.zeros(len(boxes), bool)
    for k, box in region.items():
        if box is None:
            continue
        (a1, b1), (a2, b2) = box
        m = boxes[:, 0] == k
        ov1 = np.minimum(boxes[:, 2], b1) - np.maximum(boxes[:, 1], a1)
        ov2 = np.minimum(boxes[:, 4], b2) - np.maximum(boxes[:, 3], a2)
        inside |= m & (ov1 > tol) & (ov2 > tol)
    return ~inside


def locality_cells(cx, rng):
    """One corner cell and one random cell per patch."""
    cells = []
    for p in cx.patches:
        b = p.space.breakpoints
        m = len(b) - 1
        cells.append((p.id, ((b[m - 1], b[m]), (b[m - 1], b[m]))))
        i, j = rng.integers(0, m, 2)
        cells.append((p.id, ((b[i], b[i + 1]), (b[j], b[j + 1]))))
    return cells


def _locality_level(ctx):
    """First level, at most two refinements up, where some coefficient lies outside a neighborhood."""
    level = ctx.level
    for lev in range(ctx.level, ctx.level + 3):
        c = ctx.cx(GRAD_CURL, level=lev)
        k, box = locality_cells(c, np.random.default_rng(0))[0]
        level = lev
        if outside_mask(c, 0, neighborhood(c, {k: box}, times=3)).any():
            break
    return level


def suite_locality(ctx):
    r = ctx.report
    cx = ctx.cx(GRAD_CURL, level=_locality_level(ctx))
    fns = {0: pi0_vector, 1: pi1_vector, 2: pi2_vector}
    tol = ctx.sc.tol("locality")
    for ell in (0, 1, 2):
        worst = 0.0
        outside = 0
        for k, box in locality_cells(cx, ctx.rng):
            f = _cell_input(cx, ell, k, box)
            y = fns[ell](cx, f, logical=True)
            ref = np.abs(project_pw(cx, ell, f, logical=True).vector).max()
            mask = outside_mask(cx, ell, neighborhood(cx, {k: box}, times=3))
            outside += int(mask.sum())
            if mask.any():
                worst = max(worst, np.abs(y[mask]).max() / ref)
        r.add(f"locality.outside_neighborhood[{ell}]", worst, tol, f"{outside} coefficients outside")


P_NORMS = (1, 2, np.inf)


def operator_ratios(cx, q=None):
    """Max over the stress set of |Pi v|_p / |v|_p for each form degree and p."""
    star = cx.sequence_kind == CURL_DIV
    maps = [p.mapping for p in cx.patches]
    cells = [p.space.breakpoints for p in cx.patches]
    out = {}
    for ell in (0, 1, 2):
        kind = "vector" if ell == 1 else "scalar"
        fields = stress_set(cx, kind)
        ratios = {p: [] for p in P_NORMS}
        for v in fields:
            y = project(cx, ell, v)
            st = star and ell == 1
            outf = logical_evaluators(cx, ell, y.vector)
            inf = [pullback(ell, m, v, star=st) for m in maps]
            a = lp_norms(ell, maps, outf, P_NORMS, cells=cells, star=st)
            b = lp_norms(ell, maps, inf, P_NORMS, cells=cells, star=st)
            for p, x, z in zip(P_NORMS, a, b):
                ratios[p].append(x / z)
        for p in P_NORMS:
            out[(ell, p)] = max(ratios[p])
    return out


def suite_stability(ctx):
    r = ctx.report
    rows = []
    per = {}
    for lev in ctx.sc.levels:
        cx = ctx.cx(level=lev)
        for (ell, p), v in operator_ratios(cx).items():
            per.setdefault((ell, p), []).append(v)
            rows.append([lev, ell, "inf" if p == np.inf else p, v])
    r.tables["stability"] = {"columns": ["level", "ell", "p", "ratio"], "rows": rows}
    tol = ctx.sc.tol("stability")
    for (ell, p), vals in per.items():
        pn = "inf" if p == np.inf else p
        r.add(f"stability.uniform[{ell},p={pn}]", max(vals) / min(vals), tol,
              "ratios " + " ".join(f"{v:.4f}" for v in vals))


def laplace_matrices(cx, q=None):
    """Broken mass and stiffness matrices of V^0_pw on the physical patches."""
    Ms, Ks = [], []
    for pt in cx.patches:
        S = pt.spaces.space
        x, w = gauss_on(S.breakpoints[:-1], S.breakpoints[1:], q or S.degree + 2)
        x, w = x.ravel(), w.ravel()
        B, dB = S.basis_matrix(x, sparse=True), S.basis_matrix(x, 1, sparse=True)
        V = sp.kron(B, B, format="csr")
        D1 = sp.kron(B, dB, format="csr")
        D2 = sp.kron(dB, B, format="csr")
        X1 = np.tile(x, len(x))
        X2 = np.repeat(x, len(x))
        W = np.tile(w, len(w)) * np.repeat(w, len(w))
        J = pt.mapping.jacobian(X1, X2)
        det = np.abs(_det(J))
        Ji = _inv(J)
        G = np.einsum("qai,qbi->qab", Ji, Ji)
        wd = W * det
        Ms.append((V.T @ sp.diags(wd) @ V).tocsr())
        K = sp.csr_matrix((V.shape[1], V.shape[1]))
        Ds = (D1, D2)
        for a in range(2):
            for b in range(2):
                K = K + Ds[a].T @ sp.diags(wd * G[:, a, b]) @ Ds[b]
        Ks.append(K.tocsr())
    return sp.block_diag(Ms, format="csr"), sp.block_diag(Ks, format="csr")


def laplace_eigenvalues(cx, count, sigma=-1.0):
    """Smallest eigenvalues of the V^0_h Laplacian (natural or essential BC per mode)."""
    _, B = conforming_layer(cx).basis
    M, K = laplace_matrices(cx)
    Mc = (B.T @ M @ B).tocsc()
    Kc = (B.T @ K @ B).tocsc()
    k = min(count, Mc.shape[0] - 2)
    try:
        lam, X = eigsh(Kc, k=k, M=Mc, sigma=sigma, which="LM", tol=1e-12)
    except (ArpackError, ArpackNoConvergence, RuntimeError) as exc:
        raise SolverFailure(f"shift-invert eigensolver failed: {exc}") from exc
    order = np.argsort(lam)
    lam, X = lam[order], X[:, order]
    scale = sp.linalg.norm(Kc, 1) + abs(lam).max() * sp.linalg.norm(Mc, 1)
    res = np.linalg.norm(Kc @ X - (Mc @ X) * lam, axis=0) / (scale * np.linalg.norm(X, axis=0))
    return lam, res


def rectangle_spectrum(Lx, Ly, homogeneous, count):
    lo = 1 if homogeneous else 0
    vals = sorted(np.pi ** 2 * ((m / Lx) ** 2 + (n / Ly) ** 2)
                  for m in range(lo, count + 3) for n in range(lo, count + 3))
    if not homogeneous:
        vals = vals[1:]
    return np.array(vals[:count])


def suite_eigen(ctx):
    r = ctx.report
    cfg = ctx.sc.eigen
    level = int(cfg.get("level", ctx.level))
    cx = ctx.cx(GRAD_CURL, level=level)
    count = int(cfg.get("count", 5))
    lam, res = laplace_eigenvalues(cx, count + 3)
    scale = max(abs(lam[-1]), 1.0)
    zero = lam < 1e-8 * scale
    r.add("eigen.kernel_dim", abs(int(zero.sum()) - (0 if cx.homogeneous else 1)), 0,
          f"{int(zero.sum())} zero eigenvalues")
    nz = lam[~zero][:count]
    rows = []
    if "rectangle" in cfg:
        ref = rectangle_spectrum(*cfg["rectangle"], cx.homogeneous, count)
        tol = ctx.sc.tol("eigen")
        for i, (a, b) in enumerate(zip(nz, ref)):
            rows.append([i + 1, a, b, abs(a - b) / b, res[~zero][i]])
            r.add(f"eigen.lambda[{i + 1}]", abs(a - b) / b, tol, f"computed {a:.6f} exact {b:.6f}")
    else:
        rows = [[i + 1, a, "", "", res[~zero][i]] for i, a in enumerate(nz)]
    r.add("eigen.residual", float(res.max()), 1e-8)
    r.tables["eigen"] = {"columns": ["index", "computed", "exact", "rel_error", "residual"], "rows": rows}


SUITE_FUNCS = {
    "validate": suite_validate,
    "conform": suite_conform,
    "project": suite_project,
    "commute": suite_commute,
    "rotate": suite_rotate,
    "locality": suite_locality,
    "stability": suite_stability,
    "eigen": suite_eigen,
}


def run_suites(scenario, suites=None, level=None, seed=None):
    """Run the requested suites in a fixed order; validation gates the rest."""
    level = scenario.levels[0] if level is None else level
    seed = scenario.seed if seed is None else seed
    report = SuiteReport(scenario.name, level, seed, environment=environment())
    ctx = Context(scenario, level, report, seed)
    wanted = list(suites or scenario.suites)
    order = [s for s in SUITE_FUNCS if s in wanted]
    if "validate" not in order:
        order.insert(0, "validate")
    for name in order:
        t0 = time.perf_counter()
        log.info("suite %s", name)
        try:
            ok = SUITE_FUNCS[name](ctx)
        except MpfeecError as exc:
            report.fail(f"{name}.error", f"{type(exc).__name__}: {exc}")
            ok = False
        report.timing[name] = time.perf_counter() - t0
        if name == "validate" and ok is False:
            break
    return report
