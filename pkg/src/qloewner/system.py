"""Quadratic state-space systems with affine control.

A system is the tuple (E, A, Q, B, C, x0) describing

    E x'(t) = A x(t) + Q (x(t) kron x(t)) + B u(t),   y(t) = C x(t),

with state dimension n.  The quadratic operator Q is an n x n^2 matrix
acting on the Kronecker square of the state; column index a*n + b of Q
multiplies x_a * x_b (row-major Kronecker indexing).  Q may be a dense
ndarray or a scipy.sparse matrix (large semi-discretized PDE operators
are sparse).
"""

import json

import numpy as np
import scipy.sparse as sp

_E_COND_LIMIT = 1e12
_PSI_COND_LIMIT = 1e14


class SimulationDivergenceError(RuntimeError):
    """State left the finite range during integration."""

    def __init__(self, t_bad):
        super().__init__(f"simulation diverged: non-finite state at t={t_bad:.6g}")
        self.t_bad = t_bad


def kron_vec(u, v):
    """Kronecker product of two 1-D vectors, u kron v."""
    return np.multiply.outer(np.asarray(u), np.asarray(v)).ravel()


def commutation(n):
    """Sparse permutation P with P (u kron v) = v kron u for n-vectors."""
    idx = np.arange(n * n)
    a, b = divmod(idx, n)
    return sp.csr_matrix((np.ones(n * n), (idx, b * n + a)), shape=(n * n, n * n))


def apply_quadratic(Q, u, v=None):
    """Evaluate Q (u kron v); v defaults to u."""
    z = kron_vec(u, u if v is None else v)
    out = Q @ z
    return np.asarray(out).ravel()


def quad_matrix(Q, x):
    """The n x n matrix Q (x kron I), i.e. the linearization 1/2 * d/dx Q(x kron x)."""
    n = Q.shape[0]
    if sp.issparse(Q):
        xcol = sp.csr_matrix(np.asarray(x, dtype=float).reshape(-1, 1))
        return np.asarray((Q @ sp.kron(xcol, sp.identity(n, format="csr"))).todense())
    T = np.asarray(Q).reshape(n, n, n)
    return np.einsum("iab,a->ib", T, x)


def symmetrize_quadratic(Q):
    """Symmetric part of a quadratic operator in the Kronecker sense.

    The returned Qs satisfies Qs(u kron v) = Qs(v kron u) exactly while the
    action on the diagonal is unchanged: Qs(x kron x) = Q(x kron x).
    """
    n = Q.shape[0]
    if Q.shape != (n, n * n):
        raise ValueError(f"quadratic operator must be n x n^2, got {Q.shape}")
    P = commutation(n)
    return (Q + Q @ P) / 2.0


def kron_symmetry_defect(Q):
    """Relative deviation of Q from Kronecker symmetry (0 for symmetric Q)."""
    n = Q.shape[0]
    D = Q - Q @ commutation(n)
    if sp.issparse(D):
        num = sp.linalg.norm(D)
        den = max(sp.linalg.norm(Q), 1.0)
    else:
        num = np.linalg.norm(D)
        den = max(np.linalg.norm(Q), 1.0)
    return num / den


class QuadraticSystem:
    """Immutable quadratic state-space system (E, A, Q, B, C, x0).

    Parameters
    ----------
    A : (n, n) array
    Q : (n, n^2) array or sparse matrix, Kronecker-symmetric
    B : (n,) array
    C : (n,) array (output row)
    x0 : (n,) array, optional (default zero)
    E : (n, n) array, optional mass/descriptor matrix; must be well
        conditioned (it is inverted once at construction).
    """

    def __init__(self, A, Q, B, C, x0=None, E=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if not sp.issparse(Q):
            Q = np.asarray(Q, dtype=float)
        if Q.shape != (n, n * n):
            raise ValueError(f"Q must be {n} x {n * n}, got {Q.shape}")
        B = np.asarray(B, dtype=float).ravel()
        C = np.asarray(C, dtype=float).ravel()
        if B.shape != (n,) or C.shape != (n,):
            raise ValueError("B and C must be length-n vectors")
        x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).ravel()
        if x0.shape != (n,):
            raise ValueError("x0 must be a length-n vector")
        defect = kron_symmetry_defect(Q)
        if defect > 1e-9:
            raise ValueError(
                f"Q violates Kronecker symmetry (defect {defect:.2e}); "
                "apply symmetrize_quadratic first"
            )
        self._Einv = None
        if E is not None:
            E = np.asarray(E, dtype=float)
            if E.shape != (n, n):
                raise ValueError("E must be n x n")
            cond = np.linalg.cond(E)
            if not np.isfinite(cond) or cond > _E_COND_LIMIT:
                raise ValueError(f"E is singular or ill conditioned (cond={cond:.2e})")
            self._Einv = np.linalg.inv(E)
        self.n = n
        self.A = A
        self.Q = Q
        self.B = B
        self.C = C
        self.x0 = x0
        self.E = E
        for arr in (self.A, self.B, self.C, self.x0):
            arr.setflags(write=False)
        if not sp.issparse(self.Q):
            self.Q.setflags(write=False)
        if self.E is not None:
            self.E.setflags(write=False)

    def rhs(self, x, u=0.0):
        """State derivative E^{-1}(A x + Q(x kron x) + B u)."""
        r = self.A @ x + apply_quadratic(self.Q, x) + self.B * u
        if self._Einv is not None:
            r = self._Einv @ r
        return r

    def is_linear(self):
        nrm = sp.linalg.norm(self.Q) if sp.issparse(self.Q) else np.linalg.norm(self.Q)
        return nrm == 0.0

    def __repr__(self):
        kind = "descriptor " if self.E is not None else ""
        return f"QuadraticSystem({kind}n={self.n})"


class SimulationTrace:
    """Uniform-grid simulation record: time grid, input, output, final state."""

    def __init__(self, t, u, y, x_final):
        self.t = np.asarray(t)
        self.u = np.asarray(u)
        self.y = np.asarray(y)
        self.x_final = np.asarray(x_final)
        if not (len(self.t) == len(self.u) == len(self.y)):
            raise ValueError("t, u, y must have equal length")
        dt = np.diff(self.t)
        if len(dt) and (dt.min() <= 0 or not np.allclose(dt, dt[0], rtol=1e-9)):
            raise ValueError("time grid must be strictly increasing with constant step")

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])


def _input_on_grid(u, t):
    if u is None:
        return np.zeros(len(t))
    if np.isscalar(u):
        return np.full(len(t), u, dtype=complex if np.iscomplexobj(u) else float)
    try:
        vals = np.asarray(u(t))
        if vals.shape != t.shape:
            raise ValueError
    except Exception:
        vals = np.asarray([u(tk) for tk in t])
    return vals


def simulate(sys, u, t_span, dt=1e-3, method="auto"):
    """Integrate a quadratic system with classical fixed-step RK4.

    Parameters
    ----------
    sys : QuadraticSystem
    u : callable t -> scalar (vectorized callables are used as such),
        scalar, or None for the autonomous system.  Complex inputs yield a
        complex state trajectory.
    t_span : (t0, t1) pair or final time T (start 0)
    dt : uniform step size
    method : "auto" uses the compiled sparse loop when available,
        "reference" forces the plain numpy loop (identical results)

    Returns
    -------
    SimulationTrace with y(t_k) = C x(t_k) on every grid node.

    Raises
    ------
    SimulationDivergenceError if the state becomes non-finite; the error
    carries the first bad time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t0, t1 = (0.0, float(t_span)) if np.isscalar(t_span) else map(float, t_span)
    nsteps = int(round((t1 - t0) / dt))
    if nsteps < 1:
        raise ValueError("empty time span")
    # inputs on the half grid: u(t_k), u(t_k + dt/2), u(t_k + dt)
    t_half = t0 + 0.5 * dt * np.arange(2 * nsteps + 1)
    u_half = _input_on_grid(u, t_half)
    t = t_half[::2]

    is_complex = np.iscomplexobj(u_half) or np.iscomplexobj(sys.x0)

    from ._fastsim import fast_rk4, fast_rk4_applicable
    if method == "auto" and fast_rk4_applicable(sys):
        y, x_final, bad = fast_rk4(sys, sys.x0, u_half, dt, nsteps)
        if bad >= 0:
            raise SimulationDivergenceError(t[bad])
        return SimulationTrace(t, u_half[::2], y, x_final)

    x = sys.x0.astype(complex if is_complex else float).copy()
    A, Q, B, C, Einv = sys.A, sys.Q, sys.B, sys.C, sys._Einv

    def f(xv, uv):
        r = A @ xv + Q @ np.multiply.outer(xv, xv).ravel() + B * uv
        if Einv is not None:
            r = Einv @ r
        return r

    y = np.empty(nsteps + 1, dtype=complex if is_complex else float)
    y[0] = C @ x
    h = dt
    for k in range(nsteps):
        u0, um, u1 = u_half[2 * k], u_half[2 * k + 1], u_half[2 * k + 2]
        k1 = f(x, u0)
        k2 = f(x + 0.5 * h * k1, um)
        k3 = f(x + 0.5 * h * k2, um)
        k4 = f(x + h * k3, u1)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x.view(float))):
            raise SimulationDivergenceError(t[k + 1])
        y[k + 1] = C @ x
    return SimulationTrace(t, u_half[::2], y, x)


def equilibrium_residual(sys, x):
    """Residual A x + Q(x kron x) of the equilibrium equation."""
    x = np.asarray(x, dtype=float).ravel()
    return sys.A @ x + apply_quadratic(sys.Q, x)


class ShiftResult:
    """Result of rewriting a system around an equilibrium point."""

    def __init__(self, system, dc, residual):
        self.system = system
        self.dc = dc
        self.residual = residual

    def __iter__(self):
        return iter((self.system, self.dc))


def shift_to_equilibrium(sys, x_e):
    """Rewrite the system in coordinates centered at x_e.

    Only the linear operator changes, to A + 2 Q (x_e kron I); the shifted
    initial state is x0 - x_e and the observable offset is dc = C x_e.  The
    equilibrium-equation residual A x_e + Q(x_e kron x_e) is reported so the
    caller can judge whether x_e is an actual equilibrium.
    """
    x_e = np.asarray(x_e, dtype=float).ravel()
    if x_e.shape != (sys.n,) or not np.all(np.isfinite(x_e)):
        raise ValueError("x_e must be a finite length-n vector")
    A_loc = sys.A + 2.0 * quad_matrix(sys.Q, x_e)
    shifted = QuadraticSystem(A_loc, sys.Q, sys.B, sys.C, x0=sys.x0 - x_e, E=sys.E)
    dc = float(sys.C @ x_e)
    residual = equilibrium_residual(sys, x_e)
    return ShiftResult(shifted, dc, residual)


def markov_invariants(sys):
    """The coordinate-free Markov-type parameters (CB, CAB, CQ(B kron B)).

    A descriptor E is absorbed first, so the values refer to the
    standard-form operators E^{-1}A, E^{-1}Q, E^{-1}B.
    """
    B = sys.B if sys._Einv is None else sys._Einv @ sys.B
    AB = sys.A @ B
    QBB = apply_quadratic(sys.Q, B)
    if sys._Einv is not None:
        AB = sys._Einv @ AB
        QBB = sys._Einv @ QBB
    return float(sys.C @ B), float(sys.C @ AB), float(sys.C @ QBB)


def apply_transform(sys, Psi):
    """Similarity transform: state substitution x = Psi z.

    Returns the system (Psi^-1 A Psi, Psi^-1 Q (Psi kron Psi), Psi^-1 B,
    C Psi, Psi^-1 x0); input-output behaviour is unchanged.
    """
    Psi = np.asarray(Psi, dtype=float)
    n = sys.n
    if Psi.shape != (n, n):
        raise ValueError("Psi must be n x n")
    cond = np.linalg.cond(Psi)
    if not np.isfinite(cond) or cond > _PSI_COND_LIMIT:
        raise np.linalg.LinAlgError(f"Psi is singular or ill conditioned (cond={cond:.2e})")
    Pinv = np.linalg.inv(Psi)
    Q = sys.Q.toarray() if sp.issparse(sys.Q) else sys.Q
    T = Q.reshape(n, n, n)
    Qt = np.einsum("iab,aj,bk->ijk", T, Psi, Psi).reshape(n, n * n)
    # exact re-symmetrization kills einsum rounding asymmetry
    Qt = symmetrize_quadratic(Pinv @ Qt)
    Et = None if sys.E is None else Pinv @ sys.E @ Psi
    return QuadraticSystem(Pinv @ sys.A @ Psi, Qt, Pinv @ sys.B, sys.C @ Psi,
                           x0=Pinv @ sys.x0, E=Et)


# ---------------------------------------------------------------------------
# serialization

def system_to_json(sys):
    """JSON description; sparse quadratic operators use an ijv encoding."""
    d = {
        "n": sys.n,
        "A": sys.A.tolist(),
        "B": sys.B.tolist(),
        "C": sys.C.tolist(),
        "x0": sys.x0.tolist(),
    }
    if sp.issparse(sys.Q):
        coo = sys.Q.tocoo()
        d["Q"] = {
            "sparse": True,
            "shape": [sys.n, sys.n * sys.n],
            "ijv": [[int(i), int(j), float(v)]
                    for i, j, v in zip(coo.row, coo.col, coo.data)],
        }
    else:
        d["Q"] = sys.Q.tolist()
    if sys.E is not None:
        d["E"] = sys.E.tolist()
    return json.dumps(d)


def system_from_json(text):
    d = json.loads(text)
    n = d["n"]
    Q = d["Q"]
    if isinstance(Q, dict):
        ijv = np.asarray(Q["ijv"], dtype=float)
        Q = sp.csr_matrix((ijv[:, 2], (ijv[:, 0].astype(int), ijv[:, 1].astype(int))),
                          shape=tuple(Q["shape"]))
    return QuadraticSystem(d["A"], Q, d["B"], d["C"], x0=d.get("x0"), E=d.get("E"))


def save_system(sys, path):
    with open(path, "w") as fh:
        fh.write(system_to_json(sys))


def load_system(path):
    with open(path) as fh:
        return system_from_json(fh.read())


def trace_to_csv(trace, path):
    data = np.column_stack([
        trace.t,
        np.real(trace.u), np.imag(trace.u),
        np.real(trace.y), np.imag(trace.y),
    ])
    np.savetxt(path, data, delimiter=",", header="t,re_u,im_u,re_y,im_y", comments="")


def trace_from_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    u = data[:, 1] + 1j * data[:, 2]
    y = data[:, 3] + 1j * data[:, 4]
    if np.all(data[:, 2] == 0) and np.all(data[:, 4] == 0):
        u, y = u.real, y.real
    return SimulationTrace(data[:, 0], u, y, np.array([]))
