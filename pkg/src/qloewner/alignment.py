"""Coordinate alignment between realizations of the same quadratic system.

Two routes:

* observability_transform -- when both linear operators are known, the
  stacked observability rows C A^k (k = 1..n) give the similarity
  transform in one solve.

* align_qbc_newton -- when only the shift-invariant triplets (Q, B, C)
  are shared (local models around different equilibria), the transform
  solves the constrained quadratic matrix equation

      F(X) = X U - Q (X kron X) = 0,   X B1 = B2,   C2 X = C1,

  with U = Q1 and Q = Q2, so X = T^-1 maps triplet 1 onto triplet 2.
  Each Newton step is linear in X: the exact Frechet linearization of F
  plus the two constraint blocks stack into an (n^3 + 2n) x n^2
  least-squares system in vec(X), solved per iteration.
"""

import numpy as np
import scipy.sparse as sp

from .system import QuadraticSystem


class AlignmentResult:
    """Transform aligning two triplets, with residual and iteration count."""

    def __init__(self, T, T_inv, residual, iterations, history=None):
        self.T = np.asarray(T)
        self.T_inv = np.asarray(T_inv)
        self.residual = float(residual)
        self.iterations = int(iterations)
        self.history = list(history or [])

    def __repr__(self):
        return (f"AlignmentResult(residual={self.residual:.3e}, "
                f"iterations={self.iterations})")


class UnobservableRealizationError(np.linalg.LinAlgError):
    pass


def _obs_stack(A, C, n):
    rows = []
    v = C.copy()
    for _ in range(n):
        v = v @ A
        rows.append(v.copy())
    return np.vstack(rows)


def observability_transform(sys1, sys2):
    """Similarity transform Psi with apply_transform(sys1, Psi) matching sys2.

    Both systems must be observable realizations of the same order; Psi is
    obtained from the stacked rows C A^k, k = 1..n, of each system.
    """
    if sys1.n != sys2.n:
        raise ValueError("systems must have equal order")
    n = sys1.n
    Phi1 = _obs_stack(sys1.A, sys1.C, n)
    Phi2 = _obs_stack(sys2.A, sys2.C, n)
    for name, Phi in (("first", Phi1), ("second", Phi2)):
        cond = np.linalg.cond(Phi)
        if not np.isfinite(cond) or cond > 1e14:
            raise UnobservableRealizationError(
                f"{name} realization is unobservable (cond={cond:.2e})")
    # Phi2 = Phi1 Psi for similar realizations, hence Psi = Phi1^-1 Phi2
    return np.linalg.solve(Phi1, Phi2)


def _as_triplet(obj):
    if isinstance(obj, QuadraticSystem):
        Q = obj.Q.toarray() if sp.issparse(obj.Q) else obj.Q
        return Q, obj.B, obj.C
    Q, B, C = obj
    Q = Q.toarray() if sp.issparse(Q) else np.asarray(Q, dtype=float)
    return Q, np.asarray(B, dtype=float).ravel(), np.asarray(C, dtype=float).ravel()


def triplet_residual(t1, t2, T):
    """Mismatch of triplet 2 against triplet 1 transformed by T (relative)."""
    Q1, B1, C1 = _as_triplet(t1)
    Q2, B2, C2 = _as_triplet(t2)
    X = np.linalg.inv(T)
    n = Q1.shape[0]
    Tq = np.einsum("iab,aj,bk->ijk", Q1.reshape(n, n, n), T, T).reshape(n, n * n)
    dq = np.linalg.norm(X @ Tq - Q2) / max(np.linalg.norm(Q2), 1e-30)
    db = np.linalg.norm(X @ B1 - B2) / max(np.linalg.norm(B2), 1e-30)
    dc = np.linalg.norm(C1 @ T - C2) / max(np.linalg.norm(C2), 1e-30)
    return max(dq, db, dc)


def _qme_residual(X, U, Q, B1, B2, C1, C2):
    FX = X @ U - Q @ np.kron(X, X)
    res = np.linalg.norm(FX)
    res += np.linalg.norm(X @ B1 - B2)
    res += np.linalg.norm(C2 @ X - C1)
    return res


def frechet_step(Xprev, Q, U, constraints):
    """One constrained Newton step of F(X) = X U - Q (X kron X).

    Linearizes F at Xprev with the exact Frechet derivative
    F'(X)(N) = N U - Q(X kron N) - Q(N kron X) and solves the stacked
    (n^3 + 2n) x n^2 system in vec(X) (column-major) in the least-squares
    sense.  constraints is the tuple (B1, B2, C1, C2) appending the rows
    X B1 = B2 and C2 X = C1; pass None to omit them.  Note the one-term
    contraction N U - 2 Q(X kron N) quoted for symmetric Q holds only on
    the symmetric subspace, not as a matrix identity; the two-term form
    matches finite differences everywhere.
    """
    n = Xprev.shape[0]
    In = np.eye(n)
    # Jacobian of vec(F) at Xprev, column by column over unit directions
    J = np.empty((n ** 3, n * n))
    for j in range(n * n):
        N = np.zeros((n, n))
        N[j % n, j // n] = 1.0          # column-major unit direction
        J[:, j] = frechet_derivative(Xprev, N, Q, U).reshape(-1, order="F")
    FX = qme_value(Xprev, Q, U).reshape(-1, order="F")
    blocks = [J]
    # Newton step in X-form: J vec(X) = J vec(Xprev) - vec(F(Xprev))
    rhs = [J @ Xprev.reshape(-1, order="F") - FX]
    if constraints is not None:
        B1, B2, C1, C2 = constraints
        blocks.append(np.kron(B1[None, :], In))
        rhs.append(B2)
        blocks.append(np.kron(In, C2[None, :]))
        rhs.append(C1)
    G = np.vstack(blocks)
    b = np.concatenate(rhs)
    sol, _, rank, _ = np.linalg.lstsq(G, b, rcond=None)
    if rank < n * n:
        raise np.linalg.LinAlgError(
            f"stacked step system is rank deficient ({rank} < {n * n})")
    return sol.reshape(n, n, order="F")


def align_qbc_newton(triplet1, triplet2, T0=None, gamma0=1e-10, max_iter=50,
                     seeds=5, rng=0):
    """Align two (Q, B, C) triplets sharing no linear operator.

    Newton iteration on the constrained quadratic matrix equation; random
    unit-normal restarts when no seed is supplied.  On success the result
    transform satisfies apply_transform(triplet1, T) = triplet2 up to the
    reported residual.
    """
    Q1, B1, C1 = _as_triplet(triplet1)
    Q2, B2, C2 = _as_triplet(triplet2)
    n = Q1.shape[0]
    U, Qop = Q1, Q2
    constraints = (B1, B2, C1, C2)
    rng = np.random.default_rng(rng)
    if T0 is not None:
        starts = [np.linalg.inv(np.asarray(T0, dtype=float))]
    else:
        starts = [np.eye(n)]
        starts += [rng.standard_normal((n, n)) for _ in range(max(0, seeds - 1))]
    best = None
    for X in starts:
        history = [_qme_residual(X, U, Qop, B1, B2, C1, C2)]
        it = 0
        try:
            while history[-1] > gamma0 and it < max_iter:
                X = frechet_step(X, Qop, U, constraints)
                history.append(_qme_residual(X, U, Qop, B1, B2, C1, C2))
                it += 1
                if not np.isfinite(history[-1]) or history[-1] > 1e10:
                    break
        except np.linalg.LinAlgError:
            continue
        if np.isfinite(history[-1]) and (best is None or history[-1] < best[0]):
            try:
                T = np.linalg.inv(X)
            except np.linalg.LinAlgError:
                continue
            best = (history[-1], X, T, it, history)
        if best is not None and best[0] <= gamma0:
            break
    if best is None or best[0] > max(gamma0, 1e-6):
        hist = best[4] if best is not None else []
        raise RuntimeError(
            "quadratic matrix-equation Newton did not converge "
            f"(best residual {best[0] if best else np.inf:.3e})", hist)
    _, X, T, it, history = best
    return AlignmentResult(T=T, T_inv=X, residual=history[-1], iterations=it,
                           history=history)


def frechet_derivative(X, N, Q, U):
    """Directional derivative of F at X in direction N:
    N U - Q(X kron N) - Q(N kron X)."""
    return N @ U - Q @ (np.kron(X, N) + np.kron(N, X))


def qme_value(X, Q, U):
    """F(X) = X U - Q (X kron X)."""
    return X @ U - Q @ np.kron(X, X)
