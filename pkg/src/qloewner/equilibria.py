"""Equilibrium recovery and initial-condition inference for quadratic models.

A model identified around a nonzero equilibrium carries the local linear
operator A_loc = A_glob + 2 Q (x_e kron I).  The equilibrium itself solves

    A_loc x_e - Q (x_e kron x_e) = 0,    C x_e = dc,

where the measured DC offset pins the observable component.  Folding the
DC constraint into an affine parameterization x_e = p0 + sum_i lam_i p_i
turns the first equation into a quadratic vector equation in lam, which
rules out the spurious zero solution whenever dc != 0.
"""

import numpy as np

from .quadid import QveProblem, solve_qve_multistart
from .system import QuadraticSystem, apply_quadratic, quad_matrix


class AffineFamily:
    """States x = p0 + basis @ lam satisfying Chat x = alpha for every lam."""

    def __init__(self, p0, basis, Chat, alpha):
        self.p0 = np.asarray(p0, dtype=float)
        self.basis = np.atleast_2d(np.asarray(basis, dtype=float))
        self.Chat = np.asarray(Chat, dtype=float).ravel()
        self.alpha = float(alpha)

    @property
    def m(self):
        return self.basis.shape[1]

    def point(self, lam):
        return self.p0 + self.basis @ np.atleast_1d(lam)


class EquilibriumSolution:
    """Recovered equilibrium state, DC value, and global linear operator."""

    def __init__(self, x_e, dc, A_global, residual, newton=None):
        self.x_e = np.asarray(x_e, dtype=float)
        self.dc = float(dc)
        self.A_global = np.asarray(A_global, dtype=float)
        self.residual = float(residual)
        self.newton = newton

    def __repr__(self):
        return (f"EquilibriumSolution(dc={self.dc:.6g}, "
                f"residual={self.residual:.3e})")


def parameterize_equilibrium(Chat, alpha):
    """Affine family of states satisfying Chat x = alpha.

    p0 is the minimum-norm particular solution and the basis columns are an
    orthonormal spanning set of ker(Chat), so Chat(p0 + sum c_i p_i) = alpha
    for any coefficients.
    """
    Chat = np.asarray(Chat, dtype=float).ravel()
    r = Chat.shape[0]
    nrm2 = float(Chat @ Chat)
    if nrm2 == 0.0:
        if alpha != 0.0:
            raise ValueError("Chat = 0 cannot produce a nonzero DC value")
        return AffineFamily(np.zeros(r), np.eye(r), Chat, 0.0)
    p0 = (alpha / nrm2) * Chat
    _, _, Vh = np.linalg.svd(Chat[None, :])
    return AffineFamily(p0, Vh[1:].T, Chat, alpha)


def _qve_from_affine(A_loc, Q, p0, basis, sign=-1.0):
    """QVE coefficients of A_loc x + sign * Q(x kron x) = 0 on x = p0 + P lam."""
    r, m = basis.shape
    S = A_loc @ p0 + sign * apply_quadratic(Q, p0)
    Z = np.empty((r, m))
    W = np.empty((r, m * m))
    for i in range(m):
        pi = basis[:, i]
        Z[:, i] = A_loc @ pi + sign * 2.0 * apply_quadratic(Q, p0, pi)
        for j in range(m):
            W[:, i * m + j] = sign * apply_quadratic(Q, pi, basis[:, j])
    return QveProblem(W, Z, S)


def solve_equilibrium(A_loc, Qhat, family, gamma0=1e-12, seeds=5, rng=0,
                      eta=1e-8, max_iter=100):
    """Recover the equilibrium behind a locally identified model.

    family comes from parameterize_equilibrium built on the measured DC
    term.  On success the global linear operator
    A_glob = A_loc - 2 Qhat (x_e kron I) is returned with the solution.
    """
    A_loc = np.atleast_2d(np.asarray(A_loc, dtype=float))
    prob = _qve_from_affine(A_loc, Qhat, family.p0, family.basis)
    best, _ = solve_qve_multistart(prob, seeds=seeds, rng=rng, eta=eta,
                                   gamma0=gamma0, max_iter=max_iter)
    x_e = family.point(best.lam)
    # acceptance is relative to the problem's own scale: the equation set
    # is overdetermined (r equations, r-1 unknowns), so measured operators
    # leave a noise-level least-squares residual rather than an exact root
    state_scale = float(np.linalg.norm(A_loc)) * max(1.0, float(np.linalg.norm(x_e)))
    data_scale = float(np.linalg.norm(prob.S))
    tol = max(1e-6, 1e3 * gamma0) * max(state_scale, 1.0)
    tol = max(tol, 1e-2 * data_scale)
    if best.residual > tol:
        raise RuntimeError(
            f"equilibrium Newton did not converge (residual {best.residual:.3e})",
            best.history)
    A_glob = A_loc - 2.0 * quad_matrix(Qhat, x_e)
    residual = float(np.linalg.norm(A_loc @ x_e - apply_quadratic(Qhat, x_e)))
    return EquilibriumSolution(x_e, dc=float(family.Chat @ x_e),
                               A_global=A_glob, residual=residual, newton=best)


def recover_equilibrium(model, dc, **kw):
    """Equilibrium of an identified local model given its measured DC term."""
    family = parameterize_equilibrium(model.C, dc)
    return solve_equilibrium(model.A, model.Q, family, **kw)


def global_model(model, sol):
    """Quadratic system with the recovered global linear operator."""
    return QuadraticSystem(sol.A_global, model.Q, model.B, model.C)


class _EulerSensitivity:
    """Forward-Euler propagation of state and parameter sensitivities."""

    def __init__(self, A, Q, dt):
        self.Ad = np.eye(A.shape[0]) + dt * A
        self.Q = Q
        self.dt = dt

    def step(self, x, S):
        xn = self.Ad @ x + self.dt * apply_quadratic(self.Q, x)
        n, m = S.shape
        QS = np.empty((n, m))
        for c in range(m):
            QS[:, c] = apply_quadratic(self.Q, x, S[:, c])
        Sn = self.Ad @ S + 2.0 * self.dt * QS
        return xn, Sn


def infer_x0_quadratic(model, transient, y0, dt, gamma0=1e-11, seeds=5,
                       rng=0, max_iter=100):
    """Initial state of a quadratic model from autonomous transient output.

    The observable constraint C x0 = y0 fixes one degree of freedom; the
    remaining r-1 parameters are matched against the transient samples
    (t_k, y_k) through the forward-Euler recursion of the model (a
    polynomial system in the parameters), solved by Newton with the exact
    sensitivity-propagated gradient.
    """
    ts = np.array([t for t, _ in transient], dtype=float)
    ys = np.array([y for _, y in transient], dtype=float)
    if len(ts) < model.n - 1:
        raise ValueError(f"need at least r-1={model.n - 1} transient samples")
    steps = np.round(ts / dt).astype(int)
    if np.any(np.abs(ts - steps * dt) > 1e-9 * max(dt, 1.0)):
        raise ValueError("transient sample times must lie on the Euler grid")
    if np.any(steps <= 0):
        raise ValueError("transient samples must be at positive times "
                         "(t=0 is the y0 constraint)")
    family = parameterize_equilibrium(model.C, y0)
    m = family.m
    A = model.A if model._Einv is None else model._Einv @ model.A
    Q = model.Q if model._Einv is None else model._Einv @ model.Q
    euler = _EulerSensitivity(A, Q, dt)
    kmax = int(steps.max())
    hits = {int(k): i for i, k in enumerate(steps)}
    C = model.C

    def residual_jac(kappa):
        x = family.point(kappa)
        S = family.basis.copy()
        F = np.full(len(ts), np.inf)
        J = np.zeros((len(ts), m))
        for k in range(1, kmax + 1):
            x, S = euler.step(x, S)
            if not np.all(np.isfinite(x)):
                return F, J
            if k in hits:
                i = hits[k]
                F[i] = C @ x - ys[i]
                J[i] = C @ S
        return F, J

    rng = np.random.default_rng(rng)
    starts = [np.zeros(m)] + [rng.standard_normal(m) for _ in range(seeds - 1)]
    best = None
    for kappa in starts:
        kappa = kappa.copy()
        for _ in range(max_iter):
            F, J = residual_jac(kappa)
            res = float(np.linalg.norm(F))
            if not np.isfinite(res) or res > 1e12:
                break
            if best is None or res < best[0]:
                best = (res, kappa.copy())
            if res <= gamma0:
                break
            step, *_ = np.linalg.lstsq(J, F, rcond=1e-12)
            kappa = kappa - step
            if not np.all(np.isfinite(kappa)):
                break
    if best is None:
        raise RuntimeError("initial-condition Newton failed from all seeds")
    return family.point(best[1])
