"""Walkthrough: identifying a minimal linear system from H1 samples.

Six transfer-function measurements at 5..30 Hz (plus conjugates) feed the
Loewner pencil; the singular-value decay reveals the minimal order r = 2,
the realization recovers the eigenvalues {-1, -2} to machine precision,
and two transient output samples pin the initial condition.
"""

import numpy as np

import qloewner as ql

sys0 = ql.make_linear_intro()
print("original system: eig(A) =", np.linalg.eigvals(sys0.A), "x0 =", sys0.x0)

ev = ql.GfrfEvaluator(sys0)
points = [2j * np.pi * 5 * i for i in range(1, 7)]
samples = ql.ensure_conjugate_closed([(s, ev.h1(s)) for s in points])
print(f"\ncollected {len(samples)} H1 samples (conjugate closed)")

left, right = ql.partition(samples)
pencil = ql.realify(ql.build_pencil(left, right))
r, svals = ql.reveal_order(pencil)
print("normalized singular values:", np.array2string(svals / svals[0],
                                                     precision=2))
print("revealed minimal order r =", r)

model = ql.realize(pencil, r)
print("realized eigenvalues:", np.sort(model.poles().real))
print("interpolation error:", ql.interpolation_error(model, pencil))

# transient data (u = 0) pins the initial condition
trace = ql.simulate(sys0, None, (0.0, 1.0), dt=1e-3)
x0_hat = ql.infer_x0_linear(model, [(0.0, trace.y[0]), (1.0, trace.y[-1])])
print("\ninferred x0 in realized coordinates:", x0_hat)

A, B, C = model.absorbed()
sys_id = ql.QuadraticSystem(A, np.zeros((r, r * r)), B, C, x0=x0_hat)
Psi = ql.observability_transform(sys_id, sys0)
print("aligned x0:", np.linalg.solve(Psi, x0_hat), "(true:", sys0.x0, ")")
