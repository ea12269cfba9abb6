"""Reference systems and measurement grids for the reproduction suite.

Four families: a 2-state minimal linear example, a 2-state quadratic toy
with a nonzero stable equilibrium, the forced Lorenz '63 system (input on
states 1 and 3, output x + z), and a linear-element Galerkin
semi-discretization of the viscous Burgers equation with Robin boundary
conditions on [0, 1].
"""

import numpy as np
import scipy.sparse as sp

from .system import QuadraticSystem, symmetrize_quadratic


def make_linear_intro():
    """Stable 2-state SISO linear system with nonzero initial condition."""
    A = np.diag([-1.0, -2.0])
    Q = np.zeros((2, 4))
    B = np.array([1.0, 1.0])
    C = np.array([1.0, 1.0])
    return QuadraticSystem(A, Q, B, C, x0=[0.5, 0.0])


def make_quad_toy():
    """2-state quadratic toy: unstable linear part, stable equilibrium (1, 0)."""
    A = np.diag([1.0, -2.0])
    Q = np.array([[-1.0, 0.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, 0.0]])
    B = np.array([1.0, 1.0])
    C = np.array([1.0, 1.0])
    return QuadraticSystem(A, Q, B, C, x0=[0.5, 0.0])


def make_lorenz(sigma=10.0, rho=20.0, beta=8.0 / 3.0):
    """Forced Lorenz '63 in quadratic form; input drives states 1 and 3."""
    A = np.array([[-sigma, sigma, 0.0],
                  [rho, -1.0, 0.0],
                  [0.0, 0.0, -beta]])
    Q = np.array([
        [0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, -0.5, 0, 0, 0, -0.5, 0, 0],
        [0, 0.5, 0, 0.5, 0, 0, 0, 0, 0],
    ], dtype=float)
    B = np.array([1.0, 0.0, 1.0])
    C = np.array([1.0, 0.0, 1.0])
    return QuadraticSystem(A, Q, B, C)


def lorenz_equilibria(sigma=10.0, rho=20.0, beta=8.0 / 3.0):
    """The two nonzero equilibria (rho > 1); index 0 is the negative branch."""
    s = np.sqrt(beta * (rho - 1.0))
    return [np.array([-s, -s, rho - 1.0]), np.array([s, s, rho - 1.0])]


def make_burgers(nu=0.5, sigma0=0.0, sigma1=0.1, n=257):
    """Viscous Burgers with Robin boundaries, linear finite elements.

    PDE on (0, 1): v_t - nu v_xx + v v_x = 0, with nu v_x(0) + sigma0 v(0)
    = u0(t), nu v_x(1) + sigma1 v(1) = 0; the output is the mean velocity
    int_0^1 v dx.  States are the n nodal values on the uniform grid; the
    convection operator is assembled exactly from the weak form and
    symmetrized, and Q is kept sparse.
    """
    if n < 8:
        raise ValueError("need at least 8 nodes")
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    h = 1.0 / (n - 1)
    main = np.full(n, 2 * h / 3.0)
    main[[0, -1]] = h / 3.0
    E = sp.diags([np.full(n - 1, h / 6.0), main, np.full(n - 1, h / 6.0)],
                 [-1, 0, 1]).toarray()
    kmain = np.full(n, 2.0 / h)
    kmain[[0, -1]] = 1.0 / h
    K = sp.diags([np.full(n - 1, -1.0 / h), kmain, np.full(n - 1, -1.0 / h)],
                 [-1, 0, 1]).toarray()
    A = -nu * K
    A[0, 0] += sigma0
    A[-1, -1] -= sigma1
    # convection: row g of Q gets -int phi_j phi_k' phi_g over each element
    rows, cols, vals = [], [], []
    for e in range(n - 1):
        loc = (e, e + 1)
        for aj, j in enumerate(loc):
            for ak, k in enumerate(loc):
                sgn = -1.0 if ak == 0 else 1.0
                for ag, g in enumerate(loc):
                    w = (1.0 / 3.0) if aj == ag else (1.0 / 6.0)
                    rows.append(g)
                    cols.append(j * n + k)
                    vals.append(-sgn * w)
    Qraw = sp.csr_matrix((vals, (rows, cols)), shape=(n, n * n))
    Q = symmetrize_quadratic(Qraw).tocsr()
    # left-boundary input functional u0 * phi(0); the input sign convention
    # makes the DC gain +(1/sigma1 + 1/(2 nu))
    B = np.zeros(n)
    B[0] = 1.0
    C = np.full(n, h)
    C[[0, -1]] = h / 2.0
    return QuadraticSystem(A, Q, B, C, E=E)


def _log_grid(lo, hi, count):
    return 2.0 * np.pi * np.logspace(lo, hi, count)


def _tuple_grid(axis, order):
    axis = np.asarray(axis)
    if order == 2:
        return [(1j * w1, 1j * w2) for w1 in axis for w2 in axis]
    return [(1j * w1, 1j * w2, 1j * w3)
            for w1 in axis for w2 in axis for w3 in axis]


def paper_grids(name):
    """Measurement grids per benchmark: imaginary-axis points s = j*w.

    Lorenz: 100 log-spaced H1 points on 2*pi*[1e-3, 1e3], 10-per-axis
    square grid for H2 (100 pairs) and cube grid for H3 (1000 triplets).
    Burgers: 100 H1 points on 2*pi*[1e-2, 1e1], 20-per-axis square (400
    pairs), 6-per-axis cube (216 triplets).
    """
    if name == "lorenz":
        h1 = 1j * _log_grid(-3, 3, 100)
        h2 = _tuple_grid(_log_grid(-3, 3, 10), 2)
        h3 = _tuple_grid(_log_grid(-3, 3, 10), 3)
    elif name == "burgers":
        h1 = 1j * _log_grid(-2, 1, 100)
        h2 = _tuple_grid(_log_grid(-2, 1, 20), 2)
        h3 = _tuple_grid(_log_grid(-2, 1, 6), 3)
    elif name == "linear_intro":
        h1 = 2j * np.pi * np.arange(5.0, 31.0, 5.0)
        h2 = []
        h3 = []
    elif name == "quad_toy":
        h1 = 2j * np.pi * np.arange(5.0, 31.0, 5.0)
        h2 = _tuple_grid(_log_grid(-1, 1.5, 4), 2)
        h3 = _tuple_grid(_log_grid(-1, 1.5, 3), 3)
    else:
        raise ValueError(f"unknown benchmark {name!r}")
    return {"h1": h1, "h2": h2, "h3": h3}


class BenchmarkSpec:
    """A named benchmark: constructor parameters plus measurement grids."""

    _MAKERS = {
        "linear_intro": make_linear_intro,
        "quad_toy": make_quad_toy,
        "lorenz": make_lorenz,
        "burgers": make_burgers,
    }

    def __init__(self, name, params=None, grids=None):
        if name not in self._MAKERS:
            raise ValueError(f"unknown benchmark {name!r}")
        self.name = name
        self.params = dict(params or {})
        self.grids = grids or paper_grids(name)
        if len(self.grids["h1"]) == 0:
            raise ValueError("empty H1 grid")

    def build(self):
        return self._MAKERS[self.name](**self.params)
