"""End-to-end reproduction profiles with machine-checkable verdicts.

Each profile regenerates measurement data for one benchmark (closed-form
kernel sampling by default, time-domain probing optionally), runs the
identification pipeline, and scores the outcome against the benchmark's
published targets.  Reports are plain data and serialize to JSON; CSV
side files carry singular-value decays and output comparisons.
"""

import hashlib
import json
import time

import numpy as np
import scipy.linalg as sla

from . import benchmarks
from .alignment import align_qbc_newton, observability_transform, triplet_residual
from .equilibria import infer_x0_quadratic, recover_equilibrium, global_model
from .gfrf import GfrfEvaluator, sample_kernels
from .loewner import (build_pencil, ensure_conjugate_closed, infer_x0_linear,
                      interpolation_error, partition, realify, realize,
                      reveal_order)
from .probing import ProbePlan, merge_probe_results, probe_complex_multi, \
    probe_complex_single, sawtooth
from .quadid import InferOptions, infer_quadratic
from .system import (QuadraticSystem, apply_quadratic, apply_transform,
                     markov_invariants, shift_to_equilibrium, simulate,
                     symmetrize_quadratic, trace_to_csv)

PROFILES = ("linear_intro", "quad_toy", "lorenz_case1", "lorenz_case2",
            "burgers")


def _digest(*arrays):
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.asarray(a)).tobytes())
    return h.hexdigest()[:12]


class Verdict:
    def __init__(self, name, measured, target, passed):
        self.name = name
        self.measured = measured
        self.target = target
        self.passed = bool(passed)

    def to_dict(self):
        def clean(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, np.ndarray):
                return v.tolist()
            return v
        return {"name": self.name, "measured": clean(self.measured),
                "target": self.target, "passed": self.passed}

    def __repr__(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: measured={self.measured} target={self.target}"


class StageRecord:
    def __init__(self, name, digest, scalars, wall_time):
        self.name = name
        self.inputs_digest = digest
        self.scalars = scalars
        self.wall_time = wall_time

    def to_dict(self):
        return {"name": self.name, "inputs_digest": self.inputs_digest,
                "scalars": {k: (v.item() if isinstance(v, (np.floating, np.integer))
                                else v)
                            for k, v in self.scalars.items()},
                "wall_time": self.wall_time}


class RunReport:
    """Ordered stage records plus pass/fail verdicts for one profile."""

    def __init__(self, profile):
        self.profile = profile
        self.stages = []
        self.verdicts = []
        self._t0 = time.time()

    def stage(self, name, digest="", **scalars):
        self.stages.append(StageRecord(name, digest, scalars,
                                       time.time() - self._t0))

    def verdict(self, name, measured, target, passed):
        v = Verdict(name, measured, target, passed)
        self.verdicts.append(v)
        return v

    @property
    def all_passed(self):
        return all(v.passed for v in self.verdicts)

    def to_dict(self):
        return {
            "profile": self.profile,
            "stages": [s.to_dict() for s in self.stages],
            "verdicts": [v.to_dict() for v in self.verdicts],
            "all_passed": self.all_passed,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def summary(self):
        lines = [f"profile {self.profile}:"]
        lines += ["  " + repr(v) for v in self.verdicts]
        return "\n".join(lines)


def _align_error(sysid, truth):
    Psi = observability_transform(sysid, truth)
    al = apply_transform(sysid, Psi)
    Qt = truth.Q.toarray() if hasattr(truth.Q, "toarray") else truth.Q
    Qa = al.Q.toarray() if hasattr(al.Q, "toarray") else al.Q
    return max(np.abs(al.A - truth.A).max(), np.abs(Qa - Qt).max(),
               np.abs(al.B - truth.B).max(), np.abs(al.C - truth.C).max()), Psi


def run_test_input(rom, fom, input_fn, t_span=(0.0, 20.0), dt_rom=1e-3,
                   dt_fom=None, out_csv=None):
    """Simulate both systems on the same window and report error norms.

    The comparison grid is the ROM grid (default 1 ms); a stiffer FOM may
    integrate at its own stable step and is sampled onto that grid.
    """
    dt_fom = dt_fom or dt_rom
    tr_rom = simulate(rom, input_fn, t_span, dt=dt_rom)
    tr_fom = simulate(fom, input_fn, t_span, dt=dt_fom)
    y_fom = tr_fom.y if len(tr_fom.y) == len(tr_rom.y) else np.interp(
        tr_rom.t, tr_fom.t, tr_fom.y.real)
    err = np.abs(tr_rom.y - y_fom)
    result = {
        "t": tr_rom.t, "y_fom": np.asarray(y_fom), "y_rom": tr_rom.y,
        "abs_err": err,
        "l2": float(np.linalg.norm(err)),
        "max": float(err.max()),
    }
    if out_csv:
        data = np.column_stack([tr_rom.t, np.real(y_fom), np.real(tr_rom.y), err])
        np.savetxt(out_csv, data, delimiter=",",
                   header="t,y_fom,y_rom,abs_err", comments="")
    return result


def table_inter_check(model_q0, model_qr, fom, point=(1j, 2j, 3j), tol=1e-6):
    """Held-out kernel interpolation table at one test tuple.

    Returns the H2/H3 values of the full model and of the rank-solution
    and Newton-corrected reduced models, plus the pass pattern: both
    reduced models must match H2, only the corrected one H3, and the
    rank solution's H3 mismatch must be strictly larger.
    """
    s1, s2, s3 = point
    ev_f = GfrfEvaluator(fom)
    ev_0 = GfrfEvaluator(model_q0)
    ev_r = GfrfEvaluator(model_qr)
    h2f, h3f = ev_f.h2(s1, s2), ev_f.h3(s1, s2, s3)
    rows = {
        "fom": {"h2": h2f, "h3": h3f},
        "q0": {"h2": ev_0.h2(s1, s2), "h3": ev_0.h3(s1, s2, s3)},
        "qr": {"h2": ev_r.h2(s1, s2), "h3": ev_r.h3(s1, s2, s3)},
    }
    d = {
        "h2_q0": abs(rows["q0"]["h2"] - h2f),
        "h2_qr": abs(rows["qr"]["h2"] - h2f),
        "h3_q0": abs(rows["q0"]["h3"] - h3f),
        "h3_qr": abs(rows["qr"]["h3"] - h3f),
    }
    pattern = {
        "q0_h2_pass": d["h2_q0"] <= tol,
        "qr_h2_pass": d["h2_qr"] <= tol,
        "q0_h3_fail": d["h3_q0"] > tol,
        "qr_h3_pass": d["h3_qr"] <= tol,
        "q0_worse_than_qr": d["h3_q0"] > d["h3_qr"],
    }
    return {"rows": rows, "mismatch": d, "pattern": pattern, "tol": tol}


def _save_svals(svals, path):
    sv = np.asarray(svals, dtype=float)
    data = np.column_stack([np.arange(1, len(sv) + 1), sv, sv / sv[0]])
    np.savetxt(path, data, delimiter=",",
               header="index,sigma,sigma_normalized", comments="")


# ---------------------------------------------------------------------------
# profiles

def _profile_linear_intro(rep, seed, out_dir, via_probing):
    sys0 = benchmarks.make_linear_intro()
    grids = benchmarks.paper_grids("linear_intro")
    t_start = time.time()
    if via_probing:
        plan = ProbePlan(settle_time=20.0, window=1.0, dt=1e-4, steady_tol=1e-10)
        results = [probe_complex_single(sys0, 1e-2, s.imag / (2 * np.pi), plan)
                   for s in grids["h1"]]
        samples = [(r.by_order(1)[0].freqs[0], r.by_order(1)[0].value)
                   for r in results]
    else:
        ev = GfrfEvaluator(sys0)
        samples = [(s, ev.h1(s)) for s in grids["h1"]]
    closed = ensure_conjugate_closed(samples)
    pencil = realify(build_pencil(*partition(closed)))
    r, svals = reveal_order(pencil)
    rep.stage("loewner", _digest(pencil.L), r=r,
              sv3_over_sv1=float(svals[2] / svals[0]))
    model = realize(pencil, r)
    poles = np.sort(model.poles().real)
    eig_err = float(np.abs(poles - np.array([-2.0, -1.0])).max()) if r == 2 else np.inf
    # transient for the initial condition, autonomous run
    tr = simulate(sys0, None, (0.0, 1.0), dt=1e-3)
    x0h = infer_x0_linear(model, [(0.0, tr.y[0]), (1.0, tr.y[-1])])
    A, Bv, C = model.absorbed()
    sys_id = QuadraticSystem(A, np.zeros((r, r * r)), Bv, C, x0=x0h)
    Psi = observability_transform(sys_id, sys0)
    x0_aligned = np.linalg.solve(Psi, x0h)
    x0_err = float(np.abs(x0_aligned - sys0.x0).max())
    runtime = time.time() - t_start
    rep.stage("x0", _digest(x0h), x0_err=x0_err)
    rep.verdict("order r == 2", r, "2", r == 2)
    rep.verdict("sigma3/sigma1 < 1e-12", float(svals[2] / svals[0]), "<1e-12",
                svals[2] / svals[0] < 1e-12)
    rep.verdict("eigenvalues {-1,-2} within 1e-8", eig_err, "<=1e-8",
                eig_err <= 1e-8)
    rep.verdict("aligned x0 within 1e-6", x0_err, "<=1e-6", x0_err <= 1e-6)
    rep.verdict("runtime < 1 s", runtime, "<1", runtime < 1.0)
    if out_dir:
        _save_svals(svals, f"{out_dir}/linear_intro_svals.csv")
    return {"model": model, "x0": x0h, "Psi": Psi}


def _toy_measurements(sys0, via_probing):
    x_e = np.array([1.0, 0.0])
    sh = shift_to_equilibrium(sys0, x_e)
    grids = benchmarks.paper_grids("quad_toy")
    if not via_probing:
        return sample_kernels(sh.system, grids["h1"], grids["h2"],
                              grids["h3"], dc=sh.dc), sh
    # drive frequencies stay low so the weak third-harmonic bins sit above
    # the spectral noise floor at these amplitudes
    plan = ProbePlan(settle_time=40.0, window=1.0, dt=1e-4, steady_tol=1e-10)
    results = []
    for fhz in (1.0, 2.0, 3.0, 4.0, 5.0, 6.0):
        results.append(probe_complex_single(sys0, 0.02, fhz, plan))
    for f1, f2 in ((1.0, 4.0), (2.0, 5.0), (3.0, 7.0), (1.0, 6.0)):
        results.append(probe_complex_multi(sys0, [(0.02, f1), (0.02, f2)], plan))
    return merge_probe_results(results), sh


def _profile_quad_toy(rep, seed, out_dir, via_probing):
    sys0 = benchmarks.make_quad_toy()
    mset, sh = _toy_measurements(sys0, via_probing)
    rep.stage("measurements", _digest([s.value for s in mset.h1]),
              n_h1=len(mset.h1), n_h2=len(mset.h2), n_h3=len(mset.h3),
              dc=mset.dc)
    opts = InferOptions(gamma0=1e-13, seeds=5, seed=seed)
    sysid, irep = infer_quadratic(mset, opts)
    eigA = np.sort(np.linalg.eigvals(sysid.A).real)
    eig_err = float(np.abs(eigA - np.array([-2.0, -1.0])).max())
    rep.stage("identify", _digest(sysid.A), r=irep.order, m=irep.nullity,
              newton_residual=irep.newton_residual)
    sol = recover_equilibrium(sysid, mset.dc, rng=seed)
    eig_glob = np.sort(np.linalg.eigvals(sol.A_global).real)
    eig_glob_err = float(np.abs(eig_glob - np.array([-2.0, 1.0])).max())
    gm = global_model(sysid, sol)
    align_err, Psi = _align_error(gm, sys0)
    # initial condition from a forward-Euler transient of the true system
    dt = 1e-4
    x = sys0.x0.copy()
    transient = []
    for k in range(1, 7):
        x = x + dt * (sys0.A @ x + apply_quadratic(sys0.Q, x))
        transient.append((k * dt, float(sys0.C @ x)))
    x0h = infer_x0_quadratic(gm, transient, y0=float(sys0.C @ sys0.x0), dt=dt,
                             rng=seed)
    x0_err = float(np.abs(np.linalg.solve(Psi, x0h) - sys0.x0).max())
    # time-domain acquisition carries spectral-estimation noise; the
    # probing route documents correspondingly looser targets
    rep.verdict("shifted eig {-1,-2} within 1e-8", eig_err,
                "<=1e-8 (probing 1e-4)",
                eig_err <= (1e-4 if via_probing else 1e-8))
    rep.verdict("C x_e == 1 within 1e-9", abs(sol.dc - 1.0), "<=1e-9",
                abs(sol.dc - 1.0) <= (1e-5 if via_probing else 1e-9))
    rep.verdict("global eig {1,-2} within 1e-6", eig_glob_err,
                "<=1e-6 (probing 2e-2)",
                eig_glob_err <= (2e-2 if via_probing else 1e-6))
    rep.verdict("aligned operators within 1e-7", align_err,
                "<=1e-7 (probing 5e-2)",
                align_err <= (5e-2 if via_probing else 1e-7))
    rep.verdict("aligned x0 within 1e-6", x0_err, "<=1e-6 (probing 5e-2)",
                x0_err <= (5e-2 if via_probing else 1e-6))
    return {"system": sysid, "equilibrium": sol, "global": gm}


def _profile_lorenz_case1(rep, seed, out_dir, via_probing):
    t_start = time.time()
    sys0 = benchmarks.make_lorenz(rho=0.5)
    grids = benchmarks.paper_grids("lorenz")
    mset = sample_kernels(sys0, grids["h1"], grids["h2"], grids["h3"], dc=0.0)
    rep.stage("measurements", _digest([s.value for s in mset.h1]),
              n_h1=len(mset.h1), n_h2=len(mset.h2), n_h3=len(mset.h3))
    opts = InferOptions(gamma0=1e-12, seeds=5, seed=seed)
    sysid, irep = infer_quadratic(mset, opts)
    sv = irep.singular_values
    cab = markov_invariants(sysid)[1]
    align_err, _ = _align_error(sysid, sys0)
    all_at_root = irep.seeds_at_root == len(irep.seed_results) == opts.seeds
    runtime = time.time() - t_start
    rep.stage("identify", _digest(sysid.A), r=irep.order, rank=irep.rank,
              m=irep.nullity, newton_residual=irep.newton_residual,
              seed_spread=irep.seed_spread)
    rep.verdict("order r == 3", irep.order, "3", irep.order == 3)
    rep.verdict("sigma4/sigma1 < 1e-10", float(sv[3] / sv[0]), "<1e-10",
                sv[3] / sv[0] < 1e-10)
    rep.verdict("rank(M) == 21", irep.rank, "21", irep.rank == 21)
    rep.verdict("null dimension m == 6", irep.nullity, "6", irep.nullity == 6)
    rep.verdict("CAB == -12.6667 within 1e-9", abs(cab + 38.0 / 3.0), "<=1e-9",
                abs(cab + 38.0 / 3.0) <= 1e-9)
    rep.verdict("aligned operators within 1e-8", align_err, "<=1e-8",
                align_err <= 1e-8)
    rep.verdict("5 seeds converge to one Q", float(irep.seed_spread),
                "<1e-8 (all converged)",
                all_at_root and irep.seed_spread < 1e-8)
    rep.verdict("runtime < 30 s", runtime, "<30", runtime < 30.0)
    if out_dir:
        _save_svals(sv, f"{out_dir}/lorenz_case1_svals.csv")
    return {"system": sysid, "report": irep}


_LORENZ_GLOBAL_EIG = np.array([-20.340770637047898, -8.0 / 3.0,
                               9.340770637047898])


def _profile_lorenz_case2(rep, seed, out_dir, via_probing):
    t_start = time.time()
    sys0 = benchmarks.make_lorenz(rho=20.0)
    equilibria = benchmarks.lorenz_equilibria(rho=20.0)
    grids = benchmarks.paper_grids("lorenz")
    locals_ = []
    for q, x_e in enumerate(equilibria, start=1):
        sh = shift_to_equilibrium(sys0, x_e)
        mset = sample_kernels(sh.system, grids["h1"], grids["h2"],
                              grids["h3"], dc=sh.dc)
        opts = InferOptions(gamma0=1e-12, seeds=5, seed=seed + q)
        sysid, irep = infer_quadratic(mset, opts)
        sol = recover_equilibrium(sysid, mset.dc, rng=seed + q)
        eig_glob = np.sort(sla.eigvals(sol.A_global).real)
        eig_err = float(np.abs(eig_glob - np.sort(_LORENZ_GLOBAL_EIG)).max())
        locals_.append((sysid, sol))
        rep.stage(f"equilibrium_{q}", _digest(sol.x_e), dc=sol.dc,
                  eig_err=eig_err, newton_residual=irep.newton_residual)
        target_dc = float(sys0.C @ x_e)
        rep.verdict(f"dc {target_dc:.4f} recovered within 1e-3 (eq {q})",
                    abs(sol.dc - target_dc), "<=1e-3",
                    abs(sol.dc - target_dc) <= 1e-3)
        rep.verdict(f"global eigenvalues within 1e-3 (eq {q})", eig_err,
                    "<=1e-3", eig_err <= 1e-3)
    (sys1, _), (sys2, _) = locals_
    result = align_qbc_newton((sys1.Q, sys1.B, sys1.C),
                              (sys2.Q, sys2.B, sys2.C), seeds=8, rng=seed)
    resid = triplet_residual((sys1.Q, sys1.B, sys1.C),
                             (sys2.Q, sys2.B, sys2.C), result.T)
    runtime = time.time() - t_start
    rep.stage("align", _digest(result.T), residual=result.residual,
              triplet_residual=resid, iterations=result.iterations)
    rep.verdict("QBC alignment residual < 1e-6", resid, "<1e-6", resid < 1e-6)
    rep.verdict("runtime < 60 s", runtime, "<60", runtime < 60.0)
    return {"locals": locals_, "alignment": result}


def _profile_burgers(rep, seed, out_dir, via_probing, size=257):
    t_start = time.time()
    fom = benchmarks.make_burgers(n=size)
    grids = benchmarks.paper_grids("burgers")
    mset = sample_kernels(fom, grids["h1"], grids["h2"], grids["h3"], dc=0.0)
    rep.stage("measurements", _digest([s.value for s in mset.h1]), n=size,
              n_h1=len(mset.h1), n_h2=len(mset.h2), n_h3=len(mset.h3))
    # svd_tol picks r=6 (the sixth normalized singular value sits at ~1e-10);
    # eta_ls keeps the rank solution tame enough to simulate -- heavier
    # regularization than the H2-fit optimum, chosen for time-domain
    # stability of the resulting quadratic model
    opts = InferOptions(svd_tol=5e-11, eta_ls=1e-6, eta=1e-6, gamma0=1e-5,
                        seeds=3, max_iter=60, project=True, scale_rows=False,
                        seed=seed)
    sysid, irep = infer_quadratic(mset, opts)
    sv = irep.singular_values
    # the paper's null-space count is quoted at eta = 1e-9
    rank9 = int(np.sum(irep.ls_singular_values
                       > 1e-9 * irep.ls_singular_values[0]))
    m9 = len(irep.ls_singular_values) - rank9
    q0_model = QuadraticSystem(sysid.A, symmetrize_quadratic(irep.q0),
                               sysid.B, sysid.C)
    rep.stage("identify", _digest(sysid.A), r=irep.order, rank=irep.rank,
              rank_sym=irep.rank_sym, m=irep.nullity, m_at_1e9=m9,
              newton_residual=irep.newton_residual,
              newton_status=irep.newton_status)
    ev_f = GfrfEvaluator(fom)
    ev_r = GfrfEvaluator(sysid)
    h1_err = np.array([abs(ev_f.h1(s) - ev_r.h1(s)) for s in grids["h1"]])
    table = table_inter_check(q0_model, sysid, fom, tol=1e-6)
    # time-domain comparison; FOM integrates at its RK4 stability limit
    input_fn = lambda t: (0.5 * np.exp(-0.2 * t) * sawtooth(t)
                          + 0.5 * np.sin(4 * np.pi * t))
    lam_max = max(abs(sla.eigvals(fom.A, fom.E).real))
    dt_fom = 2.5 / lam_max
    sim = run_test_input(sysid, fom, input_fn, t_span=(0.0, 20.0),
                         dt_rom=1e-3, dt_fom=dt_fom,
                         out_csv=(f"{out_dir}/burgers_output.csv"
                                  if out_dir else None))
    runtime = time.time() - t_start
    rep.stage("test_input", _digest(sim["abs_err"]), l2=sim["l2"],
              max=sim["max"], dt_fom=dt_fom)
    rep.verdict("order r == 6", irep.order, "6", irep.order == 6)
    rep.verdict("sigma7/sigma1 < 1e-8", float(sv[6] / sv[0]), "<1e-8",
                sv[6] / sv[0] < 1e-8)
    rep.verdict("H1 grid error < 1e-6", float(np.linalg.norm(h1_err)),
                "<1e-6", np.linalg.norm(h1_err) < 1e-6)
    rep.verdict("structural m + rank == symmetric dof", m9 + rank9,
                len(irep.ls_singular_values),
                m9 + rank9 == len(irep.ls_singular_values))
    rep.verdict("m == 99 at eta 1e-9", m9, "99", m9 == 99)
    rep.verdict("newton residual stagnates below 1e-4",
                float(irep.newton_residual), "<1e-4",
                irep.newton_residual < 1e-4)
    rep.verdict("output error l2 within order of 1e-1", sim["l2"],
                "[1e-2,1e0]", 1e-2 <= sim["l2"] <= 1.0)
    rep.verdict("output error max within order of 1e-3", sim["max"],
                "[1e-4,1e-2]", 1e-4 <= sim["max"] <= 1e-2)
    pat = table["pattern"]
    rep.verdict("table-inter checkmark pattern (tol 1e-6)",
                {k: bool(v) for k, v in pat.items()}, "all true",
                all(pat.values()))
    rep.verdict("runtime < 10 min", runtime, "<600", runtime < 600.0)
    if out_dir:
        _save_svals(sv, f"{out_dir}/burgers_svals.csv")
        with open(f"{out_dir}/burgers_table_inter.json", "w") as fh:
            json.dump({k: str(v) for k, v in table["mismatch"].items()}, fh)
    return {"system": sysid, "q0_model": q0_model, "table": table,
            "sim": sim, "report": irep}


def run_reproduction(profile, seed=0, out_dir=None, via_probing=False,
                     size=None):
    """Run one reproduction profile end to end; returns a RunReport."""
    rep = RunReport(profile)
    if profile == "linear_intro":
        rep.artifacts = _profile_linear_intro(rep, seed, out_dir, via_probing)
    elif profile == "quad_toy":
        rep.artifacts = _profile_quad_toy(rep, seed, out_dir, via_probing)
    elif profile == "lorenz_case1":
        rep.artifacts = _profile_lorenz_case1(rep, seed, out_dir, via_probing)
    elif profile == "lorenz_case2":
        rep.artifacts = _profile_lorenz_case2(rep, seed, out_dir, via_probing)
    elif profile == "burgers":
        rep.artifacts = _profile_burgers(rep, seed, out_dir, via_probing,
                                         size=size or 257)
    else:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    if out_dir:
        rep.save(f"{out_dir}/{profile}_report.json")
    return rep
