import numpy as np
from hypothesis import strategies as st

from mpfeec.univariate import make_space


def random_space(rng, pmax=4, cmax=9):
    """Random degree, strictly increasing breakpoints and interior regularities."""
    p = int(rng.integers(1, pmax + 1))
    m = int(rng.integers(1, cmax + 1))
    w = rng.uniform(0.2, 1.0, m)
    b = np.concatenate([[0.0], np.cumsum(w) / w.sum()])
    reg = rng.integers(0, p, m - 1) if m > 1 else None
    return make_space(p, b, reg)


@st.composite
def spaces(draw, pmax=4, cmax=9):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_space(np.random.default_rng(seed), pmax, cmax)


def spline_oracle(space, x, deriv=0):
    """Basis values from scipy's B-spline design matrix."""
    from scipy.interpolate import BSpline

    t, p = space.knots, space.degree
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, space.dim))
    for i in range(space.dim):
        c = np.zeros(space.dim)
        c[i] = 1.0
        b = BSpline(t, c, p, extrapolate=True)
        out[:, i] = (b.derivative(deriv) if deriv else b)(x)
    return out


def univariate_foundations(space, rng):
    """Max errors of the four univariate identities on one space."""
    from mpfeec.univariate import antiderivative_matrix, derivative_space, differentiation_matrix, \
        make_dual_basis

    n = space.n
    bio = 0.0
    for kind in ("l2", "local", "greville"):
        d = make_dual_basis(space, kind)
        R = d.matrix @ spline_oracle(space, d.points)
        bio = max(bio, np.abs(R - np.eye(n + 1)).max())
    x = rng.uniform(0.0, 1.0, 200)
    pou = np.abs(spline_oracle(space, x).sum(axis=1) - 1.0).max()
    pou = max(pou, np.abs(space.basis_matrix(x).sum(axis=1) - 1.0).max())
    E = space.basis_matrix([0.0, 1.0])
    K = np.zeros((2, n + 1))
    K[0, 0] = K[1, n] = 1.0
    kron = np.abs(E - K).max()
    D = differentiation_matrix(space).toarray()
    A = antiderivative_matrix(space)
    ds = derivative_space(space)
    c = rng.standard_normal(n + 1)
    dd = np.abs(ds.basis_matrix(x) @ (D @ c) - spline_oracle(space, x, 1) @ c).max() / \
        max(1.0, np.abs(spline_oracle(space, x, 1) @ c).max())
    pair = max(np.abs(D @ A - np.eye(n)).max(),
               np.abs(A @ D @ c - (c - c[0])).max(), dd)
    return {"biorthogonality": bio, "partition_of_unity": pou, "endpoint_kronecker": kron,
            "derivative_pair": pair}


FIXTURES = ("two_patch_nested", "two_patch_flipped", "square_2x2", "annulus_pair")


def fixture_complex(name, mode=None, kind=None, level=0):
    from mpfeec.scenario import load

    return load(name).build(level, bc_mode=mode, sequence_kind=kind)
