"""Walkthrough: reduced quadratic surrogate of the viscous Burgers model.

A 129-node finite-element semi-discretization (Robin boundaries,
nu = 0.5) serves as the full-order model.  From 100/400/216 kernel
samples the pipeline realizes an order-6 linear subsystem (H1 error
~4e-10 over the grid), estimates the quadratic operator in two stages,
and compares kernels and a time-domain test response.  See the README
"Burgers reproduction notes" for which published targets are attainable.
"""

import time

import numpy as np
import scipy.linalg as sla

import qloewner as ql
from qloewner.probing import sawtooth

n = 129
fom = ql.make_burgers(n=n)
grids = ql.paper_grids("burgers")
t0 = time.time()
mset = ql.sample_kernels(fom, grids["h1"], grids["h2"], grids["h3"], dc=0.0)
print(f"sampled {mset} in {time.time() - t0:.1f} s")

opts = ql.InferOptions(svd_tol=5e-11, eta_ls=1e-6, eta=1e-6, gamma0=1e-5,
                       seeds=3, max_iter=60, project=True, scale_rows=False)
rom, report = ql.infer_quadratic(mset, opts)
sv = report.singular_values
print("\nLoewner decay:", np.array2string(sv[:8] / sv[0], precision=2))
print("r =", report.order, " rank_sym =", report.rank_sym,
      " m =", report.nullity)

ev_f, ev_r = ql.GfrfEvaluator(fom), ql.GfrfEvaluator(rom)
h1_err = max(abs(ev_f.h1(s) - ev_r.h1(s)) for s in grids["h1"])
print("max H1 grid error:", h1_err)
pt2, pt3 = (1j, 2j), (1j, 2j, 3j)
print("H2 at (1j,2j):   FOM", ev_f.h2(*pt2), " ROM", ev_r.h2(*pt2))
print("H3 at (1j,2j,3j): FOM", ev_f.h3(*pt3), " ROM", ev_r.h3(*pt3))

# time-domain comparison under the published test input
u = lambda t: 0.5 * np.exp(-0.2 * t) * sawtooth(t) + 0.5 * np.sin(4 * np.pi * t)
lam = max(abs(sla.eigvals(fom.A, fom.E).real))
dt_fom = 2.5 / lam
print(f"\nFOM RK4 stability limit: dt = {dt_fom:.2e}")
tr_fom = ql.simulate(fom, u, (0.0, 20.0), dt=dt_fom)
tr_rom = ql.simulate(rom, u, (0.0, 20.0), dt=1e-3)
y_fom = np.interp(tr_rom.t, tr_fom.t, tr_fom.y.real)
err = np.abs(tr_rom.y - y_fom)
print(f"output error: |e|_2 = {np.linalg.norm(err):.3g}, "
      f"max = {err.max():.3g} over 20 s "
      f"(state reduction {n} -> {rom.n})")
