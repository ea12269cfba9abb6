"""Compiled RK4 inner loop for sparse-Q systems.

The generic integrator in system.py pays per-step Python and dense-algebra
overhead that is prohibitive for stiff semi-discretized PDE models (the
Burgers benchmark needs millions of steps at n = 257) and for long probing
runs.  This path keeps A and Q in CSR form, evaluates Q(x kron x) directly
from the sparse pattern, and applies E^-1 through a precomputed
tridiagonal factorization.  The kernel is dtype generic, so complex
harmonic inputs compile to a complex specialization.  Results agree with
the reference loop to roundoff.
"""

import numpy as np
import scipy.sparse as sp

try:
    import numba

    HAVE_NUMBA = True
except ImportError:           # pragma: no cover - numba present in CI env
    HAVE_NUMBA = False


def _tridiag_factor(E):
    n = E.shape[0]
    d = np.diag(E).copy()
    dl = np.zeros(n)
    du = np.zeros(n)
    dl[1:] = np.diag(E, -1)
    du[:-1] = np.diag(E, 1)
    # no-pivoting LU; valid for the diagonally dominant FEM mass matrix
    l = np.zeros(n)
    bp = np.zeros(n)
    bp[0] = d[0]
    for i in range(1, n):
        l[i] = dl[i] / bp[i - 1]
        bp[i] = d[i] - l[i] * du[i - 1]
    if np.any(np.abs(bp) < 1e-14 * np.abs(d).max()):
        raise np.linalg.LinAlgError("tridiagonal factorization broke down")
    return l, bp, du


def is_tridiagonal(E):
    n = E.shape[0]
    keep = (np.eye(n, dtype=bool) | np.eye(n, k=1, dtype=bool)
            | np.eye(n, k=-1, dtype=bool))
    return not np.any((E != 0.0) & ~keep)


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _rhs(x, u, ad, ai, ap, qd, qj1, qj2, qrow, B, out):
        n = x.shape[0]
        for i in range(n):
            acc = B[i] * u
            for k in range(ap[i], ap[i + 1]):
                acc += ad[k] * x[ai[k]]
            out[i] = acc
        for k in range(qd.shape[0]):
            out[qrow[k]] += qd[k] * x[qj1[k]] * x[qj2[k]]

    @numba.njit(cache=True)
    def _tri_solve(l, bp, du, r, work):
        n = r.shape[0]
        work[0] = r[0]
        for i in range(1, n):
            work[i] = r[i] - l[i] * work[i - 1]
        r[n - 1] = work[n - 1] / bp[n - 1]
        for i in range(n - 2, -1, -1):
            r[i] = (work[i] - du[i] * r[i + 1]) / bp[i]

    @numba.njit(cache=True)
    def _rk4_loop(x, u_half, h, nsteps, ad, ai, ap, qd, qj1, qj2, qrow,
                  B, C, has_e, l, bp, du, y, work, k1, k2, k3, k4, xt):
        n = x.shape[0]
        acc = x[0] - x[0]
        for i in range(n):
            acc += C[i] * x[i]
        y[0] = acc
        for step in range(nsteps):
            u0 = u_half[2 * step]
            um = u_half[2 * step + 1]
            u1 = u_half[2 * step + 2]
            _rhs(x, u0, ad, ai, ap, qd, qj1, qj2, qrow, B, k1)
            if has_e:
                _tri_solve(l, bp, du, k1, work)
            for i in range(n):
                xt[i] = x[i] + 0.5 * h * k1[i]
            _rhs(xt, um, ad, ai, ap, qd, qj1, qj2, qrow, B, k2)
            if has_e:
                _tri_solve(l, bp, du, k2, work)
            for i in range(n):
                xt[i] = x[i] + 0.5 * h * k2[i]
            _rhs(xt, um, ad, ai, ap, qd, qj1, qj2, qrow, B, k3)
            if has_e:
                _tri_solve(l, bp, du, k3, work)
            for i in range(n):
                xt[i] = x[i] + h * k3[i]
            _rhs(xt, u1, ad, ai, ap, qd, qj1, qj2, qrow, B, k4)
            if has_e:
                _tri_solve(l, bp, du, k4, work)
            bad = False
            acc = x[0] - x[0]
            for i in range(n):
                x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if not (abs(x[i]) < 1e200):
                    bad = True
                acc += C[i] * x[i]
            y[step + 1] = acc
            if bad:
                return step + 1
        return -1


def fast_rk4_applicable(sys):
    if not HAVE_NUMBA:
        return False
    if sys.E is not None and not is_tridiagonal(sys.E):
        return False
    return True


def fast_rk4(sys, x0, u_half, h, nsteps):
    """Run the compiled loop; returns (y, x_final, bad_step or -1)."""
    n = sys.n
    A = sp.csr_matrix(sys.A)
    Q = sys.Q.tocsr() if sp.issparse(sys.Q) else sp.csr_matrix(sys.Q)
    qcoo = Q.tocoo()
    qj1, qj2 = np.divmod(qcoo.col.astype(np.int64), n)
    if sys.E is not None:
        l, bp, du = _tridiag_factor(sys.E)
        has_e = True
    else:
        l = bp = du = np.zeros(1)
        has_e = False
    is_complex = np.iscomplexobj(u_half) or np.iscomplexobj(x0)
    dtype = np.complex128 if is_complex else np.float64
    x = np.asarray(x0, dtype=dtype).copy()
    u = np.asarray(u_half, dtype=dtype)
    y = np.empty(nsteps + 1, dtype=dtype)
    scratch = [np.empty(n, dtype=dtype) for _ in range(6)]
    bad = _rk4_loop(x, u, float(h), int(nsteps),
                    A.data, A.indices.astype(np.int64),
                    A.indptr.astype(np.int64),
                    qcoo.data, qj1, qj2, qcoo.row.astype(np.int64),
                    sys.B.astype(dtype), sys.C.astype(dtype),
                    has_e, l, bp, du, y, *scratch)
    return y, x, bad
