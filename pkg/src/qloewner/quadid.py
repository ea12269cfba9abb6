"""Estimation of the quadratic operator from 2nd and 3rd kernel samples.

Stage one interpolates H2 on the realized linear subsystem: each sample
contributes a row O2(s1,s2) kron R2(s1,s2)^T acting on the row-major
vectorization of Qhat, solved by least squares in the Kronecker-symmetric
coordinate basis (dimension r^2(r+1)/2).  The rank-deficient solve leaves
an affine family Qhat = Q0 + sum_i lambda_i Q_i over the null space.

Stage two pins the free parameters with H3 samples: the cross kernels
H3^(ij) assemble a quadratic vector equation

    F(lambda) = W (lambda kron lambda) + Z lambda + S = 0

solved by Newton iteration with Jacobian J = W (lambda kron I + I kron
lambda) + Z, optionally after projecting the equations onto the null-space
dimension with an SVD.
"""

import warnings

import numpy as np
import scipy.sparse as sp

from .gfrf import GfrfEvaluator, Resolvent
from .loewner import (RealizedLinear, build_pencil, ensure_conjugate_closed,
                      interpolation_error, partition, realify, realize,
                      reveal_order)
from .system import QuadraticSystem, kron_vec, symmetrize_quadratic


def sym_dim(r):
    """Dimension of the Kronecker-symmetric coordinate space, r^2(r+1)/2."""
    return r * r * (r + 1) // 2


def antisym_dim(r):
    """Count of redundant (antisymmetric) directions, r^2(r-1)/2."""
    return r * r * (r - 1) // 2


def sym_basis(r):
    """Sparse r^3 x d matrix with orthonormal columns spanning symmetric vecs.

    Column (i, a<=b) carries the unit-norm symmetrized indicator of entry
    (a, b) in row i of the quadratic operator.
    """
    rows, cols, vals = [], [], []
    col = 0
    w = 1.0 / np.sqrt(2.0)
    for i in range(r):
        base = i * r * r
        for a in range(r):
            rows.append(base + a * r + a)
            cols.append(col)
            vals.append(1.0)
            col += 1
            for b in range(a + 1, r):
                rows.extend([base + a * r + b, base + b * r + a])
                cols.extend([col, col])
                vals.extend([w, w])
                col += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(r ** 3, sym_dim(r)))


def _infer_r_from_sym(d):
    r = 1
    while sym_dim(r) < d:
        r += 1
    if sym_dim(r) != d:
        raise ValueError(f"{d} is not a symmetric-coordinate dimension")
    return r


def _absorbed(model):
    if isinstance(model, RealizedLinear):
        return model.absorbed()
    if isinstance(model, QuadraticSystem):
        if model.E is not None:
            return model._Einv @ model.A, model._Einv @ model.B, model.C
        return model.A, model.B, model.C
    A, B, C = model
    return (np.asarray(A, dtype=float), np.asarray(B, dtype=float).ravel(),
            np.asarray(C, dtype=float).ravel())


def balance_siso(A, B, C):
    """Diagonal similarity equalizing |B_i| against |C_i|.

    Loewner realizations often carry strongly lopsided B/C scalings, which
    skews the singular-value profile of the H2 least-squares matrix and
    with it the detected null-space size; this rescaling is output
    invariant and removes that artifact.
    """
    absB, absC = np.abs(B), np.abs(C)
    d = np.ones_like(absB)
    ok = (absB > 1e-12 * max(absB.max(), 1.0)) & (absC > 1e-12 * max(absC.max(), 1.0))
    d[ok] = np.sqrt(absB[ok] / absC[ok])
    D = np.diag(d)
    Dinv = np.diag(1.0 / d)
    return Dinv @ A @ D, Dinv @ B, C @ D


def assemble_h2_ls(model, samples, scale_rows=True):
    """Least-squares system for the quadratic operator from H2 samples.

    Returns (M, rhs) with real entries: complex sample rows are split into
    real and imaginary parts (the realified form of appending conjugate
    measurements), and the unknown lives in the symmetric coordinate basis.

    scale_rows equilibrates the rows (log-spaced grids span many decades
    in row magnitude, which otherwise drowns resolvable directions below
    any relative singular-value threshold); disable it to weight
    measurements by their raw magnitude instead, which acts as an implicit
    regularizer when the data is not exactly explainable at the reduced
    order.
    """
    A, B, C = _absorbed(model)
    r = A.shape[0]
    if not samples:
        raise ValueError("need at least one H2 sample")
    ev = GfrfEvaluator((A, np.zeros((r, r * r)), B, C))
    P = sym_basis(r)
    rows = np.empty((len(samples), r ** 3), dtype=complex)
    vals = np.empty(len(samples), dtype=complex)
    for k, smp in enumerate(samples):
        s1, s2 = smp.freqs
        o2 = 0.5 * ev.observe(s1 + s2)
        r2 = ev.r2(s1, s2)
        rows[k] = kron_vec(o2, r2)
        vals[k] = smp.value
    rows_sym = rows @ P
    if scale_rows:
        scale = np.linalg.norm(rows_sym, axis=1)
        scale[scale == 0] = 1.0
        rows_sym = rows_sym / scale[:, None]
        vals = vals / scale
    M = np.vstack([rows_sym.real, rows_sym.imag])
    rhs = np.concatenate([vals.real, vals.imag])
    return M, rhs


class ParameterizedQuadratic:
    """Affine family Q(lambda) = Q0 + sum_i lambda_i Q_i from the H2 solve."""

    def __init__(self, Q0, basis, singular_values, rank_sym, eta):
        self.Q0 = Q0
        self.basis = list(basis)
        self.m = len(self.basis)
        self.singular_values = singular_values
        self.rank_sym = rank_sym
        self.eta = eta
        r = Q0.shape[0]
        # rank in the redundant r^3 coordinates, counting the antisymmetry
        # constraints the symmetric basis folds in implicitly
        self.rank = rank_sym + antisym_dim(r)

    @property
    def r(self):
        return self.Q0.shape[0]

    def combine(self, lam):
        Q = self.Q0.copy()
        for li, Qi in zip(np.atleast_1d(lam), self.basis):
            Q = Q + li * Qi
        return Q


def solve_with_nullspace(M, rhs, eta=1e-8):
    """Minimum-norm least-squares solution plus an orthonormal null basis.

    Singular values below eta * sigma_1 are truncated; the corresponding
    right singular vectors, mapped back from symmetric coordinates, form
    the null-space basis {Q_1..Q_m}.
    """
    d = M.shape[1]
    r = _infer_r_from_sym(d)
    P = sym_basis(r)
    U, svals, Vh = np.linalg.svd(M, full_matrices=True)
    if svals[0] == 0:
        rank = 0
    else:
        rank = int(np.sum(svals > eta * svals[0]))
    coeffs = np.zeros(d)
    if rank > 0:
        coeffs = Vh[:rank].T @ ((U[:, :rank].T @ rhs) / svals[:rank])
    Q0 = np.asarray(P @ coeffs).reshape(r, r * r)
    basis = [np.asarray(P @ Vh[j]).reshape(r, r * r) for j in range(rank, d)]
    return ParameterizedQuadratic(Q0, basis, svals, rank, eta)


class QveProblem:
    """Quadratic vector equation F(lam) = W (lam kron lam) + Z lam + S."""

    def __init__(self, W, Z, S):
        self.W = np.atleast_2d(np.asarray(W, dtype=float))
        self.Z = np.atleast_2d(np.asarray(Z, dtype=float))
        self.S = np.asarray(S, dtype=float).ravel()
        self.k, self.m = self.Z.shape
        if self.W.shape != (self.k, self.m * self.m) or self.S.shape != (self.k,):
            raise ValueError("inconsistent QVE dimensions")
        self._Wt = self.W.reshape(self.k, self.m, self.m)

    def F(self, lam):
        lam = np.asarray(lam, dtype=float).ravel()
        return self.W @ kron_vec(lam, lam) + self.Z @ lam + self.S

    def jacobian(self, lam):
        lam = np.asarray(lam, dtype=float).ravel()
        return (np.einsum("kij,j->ki", self._Wt, lam)
                + np.einsum("kij,i->kj", self._Wt, lam) + self.Z)

    def residual(self, lam):
        return float(np.linalg.norm(self.F(lam)))


def assemble_qve(model, pq, samples, scale_rows=True):
    """Build the QVE coefficients from H3 samples and a null-space family.

    Per sample, with cross kernels on the realized linear part:
      A_ij = H3^(ij)(Q_i, Q_j),  B_i = H3^(i0) + H3^(0i),
      C    = H3^(00)(Q0, Q0) - measured H3.
    Real and imaginary parts are stacked so W, Z, S are real; scale_rows
    equilibrates each equation as in assemble_h2_ls.
    """
    if pq.m < 1:
        raise ValueError("null-space dimension is zero; nothing to infer from H3")
    if not samples:
        raise ValueError("need at least one H3 sample")
    A, B, C = _absorbed(model)
    r = A.shape[0]
    res = Resolvent(A)
    ops = np.stack([pq.Q0] + pq.basis)          # (m+1, r, r^2)
    mp1 = ops.shape[0]
    ops_flat = ops.reshape(mp1 * r, r * r)
    g1_cache = {}
    g2_cache = {}

    def g1(s):
        s = complex(s)
        v = g1_cache.get(s)
        if v is None:
            v = res.solve(s, B)
            g1_cache[s] = v
        return v

    def g2_all(sb, sc):
        key = (complex(sb), complex(sc))
        v = g2_cache.get(key)
        if v is None:
            v = g2_cache.get(key[::-1])
        if v is None:
            r2 = kron_vec(g1(sb), g1(sc)) + kron_vec(g1(sc), g1(sb))
            qr2 = (ops_flat @ r2).reshape(mp1, r)
            v = 0.5 * res.solve(sb + sc, qr2.T).T   # (m+1, r)
            g2_cache[key] = v
        return v

    Wrows = np.empty((len(samples), pq.m ** 2), dtype=complex)
    Zrows = np.empty((len(samples), pq.m), dtype=complex)
    Srows = np.empty(len(samples), dtype=complex)
    for kk, smp in enumerate(samples):
        s = smp.freqs
        o3 = res.solve_left(s[0] + s[1] + s[2], C.astype(complex)) / 3.0
        sigma = np.einsum("a,maq->mq", o3, ops)     # (m+1, r^2)
        R3 = np.zeros((mp1, r * r), dtype=complex)
        for a in range(3):
            b, c = [i for i in range(3) if i != a]
            g1a = g1(s[a])
            G2 = g2_all(s[b], s[c])
            R3 += (np.einsum("i,mj->mij", g1a, G2).reshape(mp1, r * r)
                   + np.einsum("mi,j->mij", G2, g1a).reshape(mp1, r * r))
        Hc = sigma @ R3.T                           # Hc[i, j] = O3 Q_i R3(Q_j)
        Wrows[kk] = Hc[1:, 1:].reshape(-1)
        Zrows[kk] = Hc[1:, 0] + Hc[0, 1:]
        Srows[kk] = Hc[0, 0] - smp.value
    if scale_rows:
        scale = np.sqrt(np.linalg.norm(Wrows, axis=1) ** 2
                        + np.linalg.norm(Zrows, axis=1) ** 2
                        + np.abs(Srows) ** 2)
        scale[scale == 0] = 1.0
        Wrows /= scale[:, None]
        Zrows /= scale[:, None]
        Srows /= scale
    W = np.vstack([Wrows.real, Wrows.imag])
    Z = np.vstack([Zrows.real, Zrows.imag])
    S = np.concatenate([Srows.real, Srows.imag])
    return QveProblem(W, Z, S)


def project_qve(prob, m):
    """Project k equations onto the m dominant left singular directions
    of the augmented matrix [W Z S]."""
    if m > prob.k:
        raise ValueError("cannot project onto more equations than available")
    K = np.hstack([prob.W, prob.Z, prob.S[:, None]])
    U, _, _ = np.linalg.svd(K, full_matrices=False)
    Uh = U[:, :m].T
    return QveProblem(Uh @ prob.W, Uh @ prob.Z, Uh @ prob.S)


class QveDivergenceError(RuntimeError):
    def __init__(self, history):
        super().__init__(f"Newton iteration diverged (residual {history[-1]:.3e})")
        self.history = list(history)


class NewtonResult:
    """Best iterate and residual history of one Newton run."""

    def __init__(self, lam, history, status):
        self.lam = np.asarray(lam, dtype=float)
        self.history = list(history)
        self.status = status

    @property
    def residual(self):
        return min(self.history)

    @property
    def converged(self):
        return self.status == "converged"

    def __repr__(self):
        return (f"NewtonResult(status={self.status!r}, residual="
                f"{self.residual:.3e}, iterations={len(self.history) - 1})")


def newton_qve(prob, lam0=None, eta=1e-8, gamma0=1e-9, max_iter=100):
    """Newton iteration lam <- lam - J^# F(lam) for the QVE.

    J^# is a plain solve for a square, well-conditioned Jacobian and the
    Moore-Penrose pseudo-inverse with relative threshold eta otherwise.
    Stops on residual <= gamma0, on max_iter, or on stagnation (relative
    residual change below 1e-14 for five consecutive steps).  A residual
    above 1e12 raises QveDivergenceError with the history attached.
    """
    lam = np.zeros(prob.m) if lam0 is None else np.asarray(lam0, dtype=float).ravel()
    if lam.shape != (prob.m,) or not np.all(np.isfinite(lam)):
        raise ValueError(f"lam0 must be a finite vector of length {prob.m}")
    history = [prob.residual(lam)]
    best_lam, best_res = lam.copy(), history[0]
    status = "max_iter"
    if history[0] <= gamma0:
        return NewtonResult(lam, history, "converged")
    stall = 0
    for _ in range(max_iter):
        J = prob.jacobian(lam)
        Fv = prob.F(lam)
        step = None
        if J.shape[0] == J.shape[1]:
            cond = np.linalg.cond(J)
            if np.isfinite(cond) and cond < 1.0 / max(eta, 1e-15):
                step = np.linalg.solve(J, Fv)
        if step is None:
            step, *_ = np.linalg.lstsq(J, Fv, rcond=eta)
        # backtracking keeps far-from-root seeds from overshooting; near a
        # root the full step always passes and convergence stays quadratic
        res_here = history[-1]
        alpha = 1.0
        for _bt in range(30):
            trial = lam - alpha * step
            res = prob.residual(trial)
            if res < res_here or alpha < 2 ** -29:
                break
            alpha *= 0.5
        lam = trial
        history.append(res)
        if not np.isfinite(res) or res > 1e12:
            raise QveDivergenceError(history)
        if res < best_res:
            best_res, best_lam = res, lam.copy()
        if res <= gamma0:
            status = "converged"
            break
        if abs(history[-2] - res) <= 1e-14 * max(res, 1e-300):
            stall += 1
            if stall >= 5:
                status = "stagnated"
                break
        else:
            stall = 0
    return NewtonResult(best_lam, history, status)


def solve_qve_multistart(prob, seeds=5, rng=None, eta=1e-8, gamma0=1e-9,
                         max_iter=100, retries=4):
    """Run Newton from lam0 = 0 plus random unit-normal seeds; best wins.

    A start that lands on a non-root stationary point of ||F||^2 says
    nothing about the solution set, so each seed slot is redrawn (up to
    `retries` times) until its run either converges or stagnates at a
    residual small against ||S|| (the accepted-stagnation regime).
    Returns (best NewtonResult, list of per-slot results); raises if every
    start diverges.
    """
    rng = np.random.default_rng(rng)
    s_norm = np.linalg.norm(prob.S)

    def acceptable(res):
        return res.converged or res.residual < 1e-3 * max(s_norm, 1e-300)

    results = []
    for slot in range(max(1, seeds)):
        outcome = None
        for attempt in range(1 + retries):
            if slot == 0 and attempt == 0:
                lam0 = np.zeros(prob.m)
            else:
                lam0 = rng.standard_normal(prob.m)
            try:
                run = newton_qve(prob, lam0, eta=eta, gamma0=gamma0,
                                 max_iter=max_iter)
            except QveDivergenceError:
                continue
            if outcome is None or run.residual < outcome.residual:
                outcome = run
            if acceptable(run):
                outcome = run
                break
        if outcome is not None:
            results.append(outcome)
    if not results:
        raise QveDivergenceError([np.inf])
    best = min(results, key=lambda res: res.residual)
    return best, results


class InferOptions:
    """Tuning knobs of the identification pipeline."""

    def __init__(self, order=None, svd_tol=1e-9, split="interleaved",
                 eta=1e-8, eta_ls=None, gamma0=1e-9, seeds=5, max_iter=100,
                 project=False, scale_rows=True, seed=0):
        self.order = order
        self.svd_tol = svd_tol
        self.split = split
        self.eta = eta
        self.eta_ls = eta if eta_ls is None else eta_ls
        self.gamma0 = gamma0
        self.seeds = seeds
        self.max_iter = max_iter
        self.project = project
        self.scale_rows = scale_rows
        self.seed = seed


class InferReport:
    """Per-stage diagnostics of one identification run."""

    def __init__(self):
        self.order = None
        self.singular_values = None
        self.interpolation_error = None
        self.rank = None
        self.rank_sym = None
        self.nullity = None
        self.ls_singular_values = None
        self.newton_history = None
        self.newton_status = None
        self.newton_residual = None
        self.seed_results = None
        self.seed_spread = None
        self.jacobian_smin = None
        self.s_norm = None
        self.seeds_at_root = None
        self.q0 = None
        self.family = None
        self.warnings = []

    def to_dict(self):
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            return v
        return {k: clean(v) for k, v in self.__dict__.items()
                if k not in ("seed_results", "q0", "family")}


def infer_quadratic(measurements, options=None, **kw):
    """Full identification: H1 -> Loewner realization, H2 -> rank solution
    and null space, H3 -> Newton-corrected quadratic operator.

    Returns (QuadraticSystem with x0 = 0, InferReport).  Without H3 data
    (or with an empty null space) the rank solution Q0 is returned and a
    warning is recorded in the report.
    """
    opts = options or InferOptions(**kw)
    rep = InferReport()
    if not measurements.h1:
        raise ValueError("H1 measurements are required")
    if not measurements.h2:
        raise ValueError("H2 measurements are required")
    closed = ensure_conjugate_closed(measurements.h1)
    left, right = partition(closed, mode=opts.split)
    pencil = realify(build_pencil(left, right))
    r_auto, svals = reveal_order(pencil, tol=opts.svd_tol)
    r = opts.order or r_auto
    rep.order = r
    rep.singular_values = svals
    model = realize(pencil, r)
    rep.interpolation_error = interpolation_error(model, pencil)
    model = RealizedLinear(np.eye(r), *balance_siso(*model.absorbed()),
                           singular_values=svals)

    M, rhs = assemble_h2_ls(model, measurements.h2, scale_rows=opts.scale_rows)
    pq = solve_with_nullspace(M, rhs, eta=opts.eta_ls)
    rep.rank = pq.rank
    rep.rank_sym = pq.rank_sym
    rep.nullity = pq.m
    rep.ls_singular_values = pq.singular_values
    rep.q0 = pq.Q0
    rep.family = pq

    Qhat = pq.Q0
    if not measurements.h3:
        rep.warnings.append("no H3 data: quadratic operator is the H2 rank "
                            "solution only")
    elif pq.m == 0:
        rep.warnings.append("H2 null space is empty: H3 data unused")
    else:
        prob = assemble_qve(model, pq, measurements.h3,
                            scale_rows=opts.scale_rows)
        if opts.project and prob.k > prob.m:
            prob_solve = project_qve(prob, prob.m)
        else:
            prob_solve = prob
        best, all_res = solve_qve_multistart(
            prob_solve, seeds=opts.seeds, rng=opts.seed, eta=opts.eta,
            gamma0=opts.gamma0, max_iter=opts.max_iter)
        rep.newton_history = best.history
        rep.newton_status = best.status
        rep.newton_residual = best.residual
        rep.seed_results = all_res
        rep.s_norm = float(np.linalg.norm(prob_solve.S))
        # a seed counts as having reached the root when its residual is
        # small against the data, whatever stopping rule fired last
        root_tol = max(100 * best.residual, 1e-9 * max(rep.s_norm, 1.0))
        finals = [pq.combine(res.lam) for res in all_res
                  if res.residual <= root_tol]
        rep.seeds_at_root = len(finals)
        if len(finals) > 1:
            rep.seed_spread = max(
                np.abs(fa - fb).max()
                for i, fa in enumerate(finals) for fb in finals[i + 1:])
        else:
            rep.seed_spread = 0.0
        Jbest = prob_solve.jacobian(best.lam)
        rep.jacobian_smin = float(np.linalg.svd(Jbest, compute_uv=False)[-1])
        if best.status == "stagnated":
            s_norm = np.linalg.norm(prob_solve.S)
            if best.residual < 1e-3 * s_norm:
                rep.warnings.append(
                    f"Newton stagnated at residual {best.residual:.3e} "
                    "(accepted: small relative to the data)")
            else:
                rep.warnings.append(
                    f"Newton stagnated at large residual {best.residual:.3e}")
        Qhat = pq.combine(best.lam)

    A, B, C = model.absorbed()
    sysid = QuadraticSystem(A, symmetrize_quadratic(Qhat), B, C)
    if rep.warnings:
        for msg in rep.warnings:
            warnings.warn(msg, stacklevel=2)
    return sysid, rep
