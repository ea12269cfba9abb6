"""Loewner-framework rational interpolation of transfer-function samples.

Given samples (s_k, H1(s_k)) split into left data (mu_i, v_i) and right
data (lambda_j, w_j), the Loewner and shifted Loewner matrices are

    L_ij  = (v_i - w_j) / (mu_i - lambda_j)
    Ls_ij = (mu_i v_i - lambda_j w_j) / (mu_i - lambda_j)

The rank of [L, Ls] reveals the McMillan degree of the underlying rational
function; projecting with the dominant singular subspaces yields the
descriptor realization Ehat = -Y* L X, Ahat = -Y* Ls X, Bhat = Y* V,
Chat = W X whose transfer function interpolates the retained data.
"""

import numpy as np
import scipy.linalg as sla

_DEFAULT_TOL = 1e-9


class ConjugateClosureError(ValueError):
    """Sample set is not closed under complex conjugation."""


def _as_pairs(samples):
    out = []
    for item in samples:
        if hasattr(item, "freqs"):
            out.append((complex(item.freqs[0]), complex(item.value)))
        else:
            s, v = item
            out.append((complex(s), complex(v)))
    return out


def ensure_conjugate_closed(samples, tol=1e-9):
    """Append missing conjugate samples (s_bar, v_bar) for a real system."""
    pairs = _as_pairs(samples)
    pts = [s for s, _ in pairs]
    out = list(pairs)
    for s, v in pairs:
        if abs(s.imag) <= tol * (1 + abs(s)):
            continue
        if not any(abs(p - s.conjugate()) <= tol * (1 + abs(s)) for p in pts):
            out.append((s.conjugate(), v.conjugate()))
            pts.append(s.conjugate())
    return out


def _conjugate_groups(pairs, tol=1e-9):
    """Group (point, value) pairs into conjugate pairs and real singletons."""
    used = [False] * len(pairs)
    groups = []
    for i, (s, _) in enumerate(pairs):
        if used[i]:
            continue
        used[i] = True
        if abs(s.imag) <= tol * (1 + abs(s)):
            groups.append((i,))
            continue
        mate = None
        for j in range(i + 1, len(pairs)):
            if not used[j] and abs(pairs[j][0] - s.conjugate()) <= tol * (1 + abs(s)):
                mate = j
                break
        if mate is None:
            raise ConjugateClosureError(f"no conjugate mate for sample point {s}")
        used[mate] = True
        # positive imaginary part first, for a deterministic ordering
        groups.append((i, mate) if s.imag > 0 else (mate, i))
    groups.sort(key=lambda g: (abs(pairs[g[0]][0].imag), abs(pairs[g[0]][0])))
    return groups


def partition(samples, mode="interleaved"):
    """Split samples into disjoint left/right sets for the Loewner pencil.

    Conjugate pairs are kept on the same side so each side can be
    realified on its own.  ``interleaved`` alternates groups by ascending
    |Im s|; ``block`` assigns the first half of the groups to the left.
    """
    pairs = _as_pairs(samples)
    if len(pairs) < 2:
        raise ValueError("need at least two samples")
    pts = [s for s, _ in pairs]
    if len(set(pts)) != len(pts):
        raise ValueError("duplicate sample points")
    try:
        groups = _conjugate_groups(pairs)
    except ConjugateClosureError:
        order = sorted(range(len(pts)),
                       key=lambda i: (abs(pts[i].imag), abs(pts[i]), pts[i].imag))
        groups = [(i,) for i in order]
    if mode == "interleaved":
        left_groups = groups[0::2]
        right_groups = groups[1::2]
    elif mode == "block":
        half = (len(groups) + 1) // 2
        left_groups = groups[:half]
        right_groups = groups[half:]
    else:
        raise ValueError(f"unknown split mode {mode!r}")
    if not right_groups:
        raise ValueError("not enough samples to populate both sides")
    left = [pairs[i] for g in left_groups for i in g]
    right = [pairs[i] for g in right_groups for i in g]
    return left, right


class LoewnerPencil:
    """Left/right partitioned data with Loewner and shifted Loewner matrices."""

    def __init__(self, mu, lam, V, W, L, Ls, is_real=False):
        self.mu = np.asarray(mu)
        self.lam = np.asarray(lam)
        self.V = np.asarray(V)
        self.W = np.asarray(W)
        self.L = np.asarray(L)
        self.Ls = np.asarray(Ls)
        self.is_real = is_real

    @property
    def points(self):
        return np.concatenate([self.mu, self.lam])

    @property
    def values(self):
        return np.concatenate([self.V, self.W])


def build_pencil(left, right):
    """Entrywise Loewner / shifted-Loewner construction from split data."""
    left = _as_pairs(left)
    right = _as_pairs(right)
    mu = np.array([s for s, _ in left])
    V = np.array([v for _, v in left])
    lam = np.array([s for s, _ in right])
    W = np.array([v for _, v in right])
    denom = mu[:, None] - lam[None, :]
    if np.any(np.abs(denom) == 0.0):
        raise ValueError("left and right point sets must be disjoint")
    L = (V[:, None] - W[None, :]) / denom
    Ls = (mu[:, None] * V[:, None] - lam[None, :] * W[None, :]) / denom
    return LoewnerPencil(mu, lam, V, W, L, Ls)


def _real_transform(pairs_points, tol=1e-9):
    """Unitary block transform M with M f real for conjugate-paired data."""
    idx_pairs = _conjugate_groups([(s, 0.0) for s in pairs_points], tol)
    k = len(pairs_points)
    M = np.zeros((k, k), dtype=complex)
    row = 0
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for g in idx_pairs:
        if len(g) == 1:
            M[row, g[0]] = 1.0
            row += 1
        else:
            i, j = g
            M[row, i] = inv_sqrt2
            M[row, j] = inv_sqrt2
            M[row + 1, i] = -1j * inv_sqrt2
            M[row + 1, j] = 1j * inv_sqrt2
            row += 2
    return M


def realify(pencil, tol=1e-8):
    """Transform conjugate-closed complex Loewner data to real arithmetic.

    Applies the unitary block transform separately to the left and right
    sides; the realization built from the transformed pencil has the same
    transfer function.  Raises ConjugateClosureError when either side is
    not closed under conjugation, or when the residual imaginary part is
    inconsistent with real-system data.
    """
    if pencil.is_real:
        return pencil
    ML = _real_transform(pencil.mu)
    MR = _real_transform(pencil.lam)
    L = ML @ pencil.L @ MR.conj().T
    Ls = ML @ pencil.Ls @ MR.conj().T
    V = ML @ pencil.V
    W = pencil.W @ MR.conj().T
    scale = max(np.abs(pencil.L).max(), np.abs(pencil.V).max(), 1.0)
    resid = max(np.abs(L.imag).max(), np.abs(Ls.imag).max(),
                np.abs(V.imag).max(), np.abs(W.imag).max())
    if resid > tol * scale:
        raise ConjugateClosureError(
            f"imaginary residue {resid:.2e} after realification; values are "
            "not conjugate-consistent")
    out = LoewnerPencil(pencil.mu, pencil.lam, V.real, W.real,
                        L.real, Ls.real, is_real=True)
    # original complex data retained for interpolation checks
    out.sample_points = pencil.points
    out.sample_values = pencil.values
    return out


def reveal_order(pencil, tol=_DEFAULT_TOL):
    """Numerical rank of the stacked pencil [L, Ls].

    Returns (r, singular_values); r counts normalized singular values
    above tol, and the full spectrum supports decay plots and manual
    order selection.
    """
    svals = np.linalg.svd(np.hstack([pencil.L, pencil.Ls]), compute_uv=False)
    if svals[0] == 0:
        return 0, svals
    r = int(np.sum(svals / svals[0] > tol))
    return r, svals


class RealizedLinear:
    """Reduced descriptor realization (Ehat, Ahat, Bhat, Chat) of order r."""

    def __init__(self, Ehat, Ahat, Bhat, Chat, singular_values=None):
        self.Ehat = np.atleast_2d(np.asarray(Ehat))
        self.Ahat = np.atleast_2d(np.asarray(Ahat))
        self.Bhat = np.asarray(Bhat).ravel()
        self.Chat = np.asarray(Chat).ravel()
        self.r = self.Ehat.shape[0]
        self.singular_values = (np.asarray(singular_values)
                                if singular_values is not None else None)

    def transfer(self, s):
        """Chat (s Ehat - Ahat)^-1 Bhat."""
        return complex(self.Chat @ np.linalg.solve(s * self.Ehat - self.Ahat,
                                                   self.Bhat.astype(complex)))

    def poles(self):
        return sla.eigvals(self.Ahat, self.Ehat)

    def absorbed(self):
        """Standard-form operators (E^-1 Ahat, E^-1 Bhat, Chat)."""
        A = np.linalg.solve(self.Ehat, self.Ahat)
        B = np.linalg.solve(self.Ehat, self.Bhat)
        return A, B, self.Chat.copy()


def realize(pencil, r):
    """Project the Loewner pencil to order r via dominant singular subspaces."""
    L, Ls = pencil.L, pencil.Ls
    if r > min(L.shape[0], L.shape[1]):
        raise ValueError(f"r={r} exceeds pencil dimensions {L.shape}")
    Yfull, svals, _ = np.linalg.svd(np.hstack([L, Ls]), full_matrices=False)
    _, _, Xh = np.linalg.svd(np.vstack([L, Ls]), full_matrices=False)
    Y = Yfull[:, :r]
    X = Xh[:r, :].conj().T
    Ehat = -Y.conj().T @ L @ X
    Ahat = -Y.conj().T @ Ls @ X
    Bhat = Y.conj().T @ pencil.V
    Chat = pencil.W @ X
    if pencil.is_real:
        Ehat, Ahat = Ehat.real, Ahat.real
        Bhat, Chat = Bhat.real, Chat.real
    condE = np.linalg.cond(Ehat)
    if not np.isfinite(condE) or condE > 1e13:
        raise np.linalg.LinAlgError(
            f"Ehat singular at order r={r} (cond={condE:.2e}); "
            "pick r at a singular-value gap")
    return RealizedLinear(Ehat, Ahat, Bhat, Chat, singular_values=svals)


def interpolation_error(model, pencil):
    """Max relative transfer-function mismatch over all pencil sample points."""
    pts = getattr(pencil, "sample_points", pencil.points)
    vals = getattr(pencil, "sample_values", pencil.values)
    errs = []
    for s, v in zip(pts, vals):
        errs.append(abs(model.transfer(s) - v) / max(abs(v), 1e-30))
    return max(errs)


class IllConditionedCollocationError(np.linalg.LinAlgError):
    pass


def infer_x0_linear(model, transient, cond_limit=1e12):
    """Initial state of the realized linear model from autonomous output data.

    transient is a sequence of (t_k, y_k) with u = 0; at least r samples
    are needed.  Solves the collocation system Chat exp(A t_k) x0 = y_k in
    the least-squares sense on the E-absorbed operators.
    """
    A, _, C = model.absorbed()
    ts = np.array([t for t, _ in transient], dtype=float)
    ys = np.array([y for _, y in transient], dtype=float)
    if len(ts) < model.r:
        raise ValueError(f"need at least r={model.r} transient samples")
    G = np.vstack([C @ sla.expm(A * t) for t in ts])
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedCollocationError(
            f"collocation matrix ill conditioned (cond={cond:.2e}); "
            "spread the sample times")
    x0, *_ = np.linalg.lstsq(G, ys, rcond=None)
    return x0
