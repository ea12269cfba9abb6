"""Closed-form evaluation of generalized frequency response functions.

For the quadratic system E x' = A x + Q(x kron x) + B u, y = C x, with
resolvent Phi(s) = (s E - A)^-1, the first three symmetric kernels are

    H1(s1)          = C Phi(s1) B
    H2(s1, s2)      = 1/2 C Phi(s1+s2) Q [G1(s1) kron G1(s2) + G1(s2) kron G1(s1)]
    H3(s1, s2, s3)  = 1/3 C Phi(s1+s2+s3) Q R3(s1, s2, s3)

with G1(s) = Phi(s) B, G2(s1,s2) = 1/2 Phi(s1+s2) Q R2(s1,s2) and R3 the
six-term sum of G1/G2 Kronecker pairings over the three arguments.  The
normalizations make each Hk the multivariate Laplace transform of the
symmetric time-domain kernel, which is the quantity harmonic probing
measures.  The cross kernel H3^{(ij)} places two different quadratic
operators in the left/right slots; it is linear in each slot separately.
"""

import json

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .system import QuadraticSystem, kron_vec

_RCOND_LIMIT = 1e-14


class SingularResolventError(np.linalg.LinAlgError):
    """(sE - A) is numerically singular at the requested frequency."""

    def __init__(self, s, rcond=None):
        extra = "" if rcond is None else f" (rcond={rcond:.2e})"
        super().__init__(f"resolvent singular at s={s}{extra}")
        self.s = s


class Resolvent:
    """LU-backed evaluator of (s E - A)^-1 with per-frequency memoization."""

    def __init__(self, A, E=None):
        self.A = np.asarray(A, dtype=float)
        self.n = self.A.shape[0]
        self.E = None if E is None else np.asarray(E, dtype=float)
        self._cache = {}

    def _factor(self, s):
        s = complex(s)
        fac = self._cache.get(s)
        if fac is None:
            M = s * (np.eye(self.n) if self.E is None else self.E) - self.A
            M = M.astype(complex)
            anorm = np.linalg.norm(M, 1)
            lu, piv = sla.lu_factor(M)
            gecon = sla.get_lapack_funcs("gecon", (lu,))
            rcond, info = gecon(lu, anorm, norm="1")
            if info != 0 or rcond < _RCOND_LIMIT:
                raise SingularResolventError(s, rcond)
            fac = (lu, piv)
            self._cache[s] = fac
        return fac

    def solve(self, s, rhs):
        """(sE - A)^-1 rhs for a vector or a stack of column vectors."""
        lu, piv = self._factor(s)
        return sla.lu_solve((lu, piv), np.asarray(rhs, dtype=complex))

    def solve_left(self, s, row):
        """row (sE - A)^-1 for a row vector."""
        lu, piv = self._factor(s)
        return sla.lu_solve((lu, piv), np.asarray(row, dtype=complex), trans=1)

    def matrix(self, s):
        lu, piv = self._factor(s)
        return sla.lu_solve((lu, piv), np.eye(self.n, dtype=complex))


class GfrfEvaluator:
    """Kernel evaluator for one system, caching resolvent factors and G-maps."""

    def __init__(self, sys):
        if isinstance(sys, QuadraticSystem):
            A, Q, B, C, E = sys.A, sys.Q, sys.B, sys.C, sys.E
        else:
            A, Q, B, C = sys[:4]
            E = sys[4] if len(sys) > 4 else None
        self.A, self.Q, self.B, self.C = A, Q, B, np.asarray(C, dtype=float)
        self.n = self.A.shape[0]
        self.resolvent = Resolvent(A, E)
        self._g1 = {}
        self._g2 = {}

    def g1(self, s1):
        s1 = complex(s1)
        g = self._g1.get(s1)
        if g is None:
            g = self.resolvent.solve(s1, self.B)
            self._g1[s1] = g
        return g

    def r2(self, s1, s2):
        a, b = self.g1(s1), self.g1(s2)
        return kron_vec(a, b) + kron_vec(b, a)

    def g2(self, s1, s2, Qop=None):
        cached = Qop is None
        key = (complex(s1), complex(s2))
        if cached:
            hit = self._g2.get(key)
            if hit is None:
                hit = self._g2.get(key[::-1])
            if hit is not None:
                return hit
            Qop = self.Q
        g = 0.5 * self.resolvent.solve(s1 + s2, Qop @ self.r2(s1, s2))
        if cached:
            self._g2[key] = g
        return g

    def r3(self, s1, s2, s3, Qop=None):
        s = (s1, s2, s3)
        out = np.zeros(self.n * self.n, dtype=complex)
        for a in range(3):
            b, c = [i for i in range(3) if i != a]
            g1a = self.g1(s[a])
            g2bc = self.g2(s[b], s[c], Qop)
            out += kron_vec(g1a, g2bc) + kron_vec(g2bc, g1a)
        return out

    def observe(self, s):
        """Row C Phi(s)."""
        return self.resolvent.solve_left(s, self.C)

    def h1(self, s1):
        return complex(self.C @ self.g1(s1))

    def h2(self, s1, s2):
        g = self.g2(s1, s2)
        return complex(self.C @ g)

    def h3(self, s1, s2, s3):
        return self.h3_cross(self.Q, self.Q, s1, s2, s3)

    def h3_cross(self, Qi, Qj, s1, s2, s3):
        # 1/3 (not 1/6) makes H3 the Laplace transform of the symmetric
        # time-domain kernel, i.e. exactly the value harmonic probing
        # measures: the third-harmonic state coefficient is Phi Q R3 and
        # the diagonal multi-index carries multinomial weight 3!/2!1! = 3.
        o3 = self.observe(s1 + s2 + s3) / 3.0
        r3 = self.r3(s1, s2, s3, None if Qj is self.Q else Qj)
        return complex(o3 @ (Qi @ r3))

    def eval(self, order, freqs):
        if order == 1:
            return self.h1(freqs[0])
        if order == 2:
            return self.h2(*freqs)
        if order == 3:
            return self.h3(*freqs)
        raise ValueError(f"kernel order {order} not supported")


def resolvent(sys, s):
    """The matrix (sE - A)^-1; raises SingularResolventError at spectra."""
    return Resolvent(sys.A, sys.E).matrix(s)


def h1(sys, s1):
    return GfrfEvaluator(sys).h1(s1)


def h2(sys, s1, s2):
    return GfrfEvaluator(sys).h2(s1, s2)


def h3(sys, s1, s2, s3):
    return GfrfEvaluator(sys).h3(s1, s2, s3)


def g_maps(sys, freqs):
    """Input-to-state maps: G1(s1) for one frequency, G2(s1,s2) for two."""
    ev = GfrfEvaluator(sys)
    if len(freqs) == 1:
        return ev.g1(freqs[0])
    if len(freqs) == 2:
        return ev.g2(*freqs)
    raise ValueError("g_maps supports one or two frequencies")


def h3_cross(sys, Qi, Qj, s1, s2, s3):
    """O3(s1,s2,s3) Q_i R3(s1,s2,s3, Q_j) on the linear part of sys."""
    return GfrfEvaluator(sys).h3_cross(Qi, Qj, s1, s2, s3)


# ---------------------------------------------------------------------------
# measurement records

class GfrfSample:
    """One kernel measurement: order k, frequency tuple, complex value."""

    def __init__(self, order, freqs, value):
        order = int(order)
        freqs = tuple(complex(s) for s in np.atleast_1d(freqs))
        if order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        if len(freqs) != order:
            raise ValueError(f"expected {order} frequencies, got {len(freqs)}")
        value = complex(value)
        if not np.isfinite(value):
            raise ValueError("sample value must be finite")
        self.order = order
        self.freqs = freqs
        self.value = value

    def sorted_key(self):
        return tuple(sorted(self.freqs, key=lambda s: (s.real, s.imag)))

    def __repr__(self):
        return f"GfrfSample(order={self.order}, freqs={self.freqs}, value={self.value})"


class MeasurementSet:
    """Samples of the first three symmetric kernels plus the DC offset."""

    def __init__(self, h1=(), h2=(), h3=(), dc=0.0):
        self.h1 = list(h1)
        self.h2 = list(h2)
        self.h3 = list(h3)
        self.dc = float(dc)
        for order, group in ((1, self.h1), (2, self.h2), (3, self.h3)):
            keys = set()
            for smp in group:
                if smp.order != order:
                    raise ValueError(f"sample of order {smp.order} in h{order} list")
                key = smp.sorted_key()
                if key in keys:
                    raise ValueError(f"duplicate frequency tuple {key} in h{order}")
                keys.add(key)

    def __repr__(self):
        return (f"MeasurementSet(h1:{len(self.h1)}, h2:{len(self.h2)}, "
                f"h3:{len(self.h3)}, dc={self.dc:.6g})")


def sample_kernels(sys, h1_points=(), h2_points=(), h3_points=(), dc=0.0):
    """Sample closed-form kernels of a known system into a MeasurementSet.

    Tuples that coincide up to argument permutation are sampled once
    (symmetric kernels make them redundant), so dense Cartesian grids can
    be passed directly.
    """
    ev = GfrfEvaluator(sys)
    m1 = [GfrfSample(1, (s,), ev.h1(s)) for s in h1_points]
    m2, m3 = [], []
    for order, points, out in ((2, h2_points, m2), (3, h3_points, m3)):
        seen = set()
        for pt in points:
            key = tuple(sorted((complex(s) for s in pt),
                               key=lambda z: (z.real, z.imag)))
            if key in seen:
                continue
            seen.add(key)
            out.append(GfrfSample(order, pt, ev.eval(order, pt)))
    return MeasurementSet(m1, m2, m3, dc=dc)


def save_measurements(mset, path):
    """JSON-lines format: a {"dc": a} header, then one sample per line."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"dc": mset.dc}) + "\n")
        for group in (mset.h1, mset.h2, mset.h3):
            for smp in group:
                rec = {
                    "order": smp.order,
                    "s": [[s.real, s.imag] for s in smp.freqs],
                    "value": [smp.value.real, smp.value.imag],
                }
                fh.write(json.dumps(rec) + "\n")


def load_measurements(path):
    dc = 0.0
    groups = {1: [], 2: [], 3: []}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "dc" in rec:
                dc = float(rec["dc"])
                continue
            freqs = [complex(re, im) for re, im in rec["s"]]
            val = complex(*rec["value"])
            smp = GfrfSample(rec["order"], freqs, val)
            groups[smp.order].append(smp)
    return MeasurementSet(groups[1], groups[2], groups[3], dc=dc)
