"""Command-line front end for the identification pipelines.

Subcommands: bench (reference systems and grids), probe (time-domain
kernel estimation), realize (Loewner realization of H1 data), identify
(full quadratic inference), equilibrium (DC-constrained equilibrium
recovery), align (coordinate alignment), repro (paper reproduction
profiles).  All outputs are UTF-8 JSON/CSV.
"""

import argparse
import json
import sys as _sys

import numpy as np

from . import benchmarks, repro
from .alignment import align_qbc_newton, observability_transform
from .equilibria import global_model, recover_equilibrium
from .gfrf import load_measurements, save_measurements
from .loewner import (build_pencil, ensure_conjugate_closed, partition,
                      realify, realize, reveal_order)
from .probing import (ProbePlan, merge_probe_results, probe_complex_multi,
                      probe_complex_single)
from .quadid import InferOptions, infer_quadratic
from .system import (QuadraticSystem, apply_transform, load_system,
                     save_system, system_to_json)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--out-dir", default=".", help="directory for side files")


def _cmd_bench(args):
    if args.action == "make":
        params = {}
        if args.name == "lorenz":
            params = {"rho": args.rho, "sigma": args.sigma, "beta": args.beta}
        elif args.name == "burgers":
            params = {"nu": args.nu, "sigma0": args.sigma0,
                      "sigma1": args.sigma1, "n": args.size}
        sys0 = benchmarks.BenchmarkSpec(args.name, params).build()
        save_system(sys0, args.out)
        print(f"wrote {args.name} system ({sys0.n} states) to {args.out}")
    else:
        grids = benchmarks.paper_grids(args.name)
        payload = {
            "h1": [[s.real, s.imag] for s in grids["h1"]],
            "h2": [[[s.real, s.imag] for s in pt] for pt in grids["h2"]],
            "h3": [[[s.real, s.imag] for s in pt] for pt in grids["h3"]],
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh)
        print(f"wrote grids for {args.name} to {args.out}")


def _cmd_probe(args):
    sys0 = load_system(args.system)
    with open(args.plan) as fh:
        plan_doc = json.load(fh)
    plan = ProbePlan.from_json(json.dumps(plan_doc.get("plan", plan_doc)))
    results = []
    for run in plan_doc.get("runs", []):
        kind = run.get("kind", "single")
        if kind == "single":
            results.append(probe_complex_single(
                sys0, run["amplitude"], run["freq"], plan))
        elif kind == "multi":
            results.append(probe_complex_multi(
                sys0, [tuple(t) for t in run["tones"]], plan))
        else:
            raise SystemExit(f"unknown probe run kind {kind!r}")
    mset = merge_probe_results(results)
    save_measurements(mset, args.out)
    print(f"probed {len(results)} runs -> {len(mset.h1)}/{len(mset.h2)}/"
          f"{len(mset.h3)} kernel samples, dc={mset.dc:.6g}; wrote {args.out}")


def _cmd_realize(args):
    mset = load_measurements(args.measurements)
    closed = ensure_conjugate_closed([(s.freqs[0], s.value) for s in mset.h1])
    pencil = realify(build_pencil(*partition(closed, mode=args.split)))
    r, svals = reveal_order(pencil, tol=args.tol)
    if args.order != "auto":
        r = int(args.order)
    norm = svals / svals[0]
    print("normalized singular values:")
    for i, v in enumerate(norm[:min(12, len(norm))], start=1):
        print(f"  sigma_{i}/sigma_1 = {v:.3e}")
    model = realize(pencil, r)
    A, B, C = model.absorbed()
    out = QuadraticSystem(A, np.zeros((r, r * r)), B, C)
    save_system(out, args.out)
    if args.svals:
        repro._save_svals(svals, args.svals)
    print(f"realized order {r} linear model -> {args.out}")


def _cmd_identify(args):
    mset = load_measurements(args.measurements)
    opts = InferOptions(order=None if args.order == "auto" else int(args.order),
                        svd_tol=args.tol, eta=args.eta, eta_ls=args.eta_ls,
                        gamma0=args.gamma0, seeds=args.seeds,
                        project=args.project, scale_rows=args.scale_rows,
                        seed=args.seed)
    sysid, rep = infer_quadratic(mset, opts)
    save_system(sysid, args.out)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=2)
    print(f"identified order-{rep.order} quadratic model (m={rep.nullity}, "
          f"newton {rep.newton_status} at {rep.newton_residual:.3e}) -> {args.out}")


def _cmd_equilibrium(args):
    model = load_system(args.model)
    sol = recover_equilibrium(model, args.dc, rng=args.seed)
    gm = global_model(model, sol)
    payload = {
        "x_e": sol.x_e.tolist(),
        "dc": sol.dc,
        "A_global": sol.A_global.tolist(),
        "residual": sol.residual,
        "global_eigenvalues": sorted(np.linalg.eigvals(sol.A_global).real.tolist()),
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
    if args.global_model:
        save_system(gm, args.global_model)
    print(f"equilibrium dc={sol.dc:.6g}, residual={sol.residual:.3e} -> {args.out}")


def _cmd_align(args):
    a = load_system(args.model_a)
    b = load_system(args.model_b)
    if args.mode == "observability":
        Psi = observability_transform(a, b)
        aligned = apply_transform(a, Psi)
        payload = {"T": Psi.tolist(),
                   "T_inv": np.linalg.inv(Psi).tolist(),
                   "max_entry_error": float(max(
                       np.abs(aligned.A - b.A).max(),
                       np.abs(np.asarray(aligned.Q) - np.asarray(b.Q)).max(),
                       np.abs(aligned.B - b.B).max(),
                       np.abs(aligned.C - b.C).max()))}
    else:
        result = align_qbc_newton((a.Q, a.B, a.C), (b.Q, b.B, b.C),
                                  rng=args.seed)
        payload = {"T": result.T.tolist(), "T_inv": result.T_inv.tolist(),
                   "residual": result.residual,
                   "iterations": result.iterations}
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"alignment ({args.mode}) -> {args.out}")


def _cmd_repro(args):
    report = repro.run_reproduction(args.profile, seed=args.seed,
                                    out_dir=args.out_dir,
                                    via_probing=args.via_probing,
                                    size=args.size)
    print(report.summary())
    if not report.all_passed:
        return 1
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="qloewner",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="reference systems and grids")
    b.add_argument("action", choices=["make", "grids"])
    b.add_argument("--name", required=True,
                   choices=["linear_intro", "quad_toy", "lorenz", "burgers"])
    b.add_argument("--out", required=True)
    b.add_argument("--rho", type=float, default=20.0)
    b.add_argument("--sigma", type=float, default=10.0)
    b.add_argument("--beta", type=float, default=8.0 / 3.0)
    b.add_argument("--nu", type=float, default=0.5)
    b.add_argument("--sigma0", type=float, default=0.0)
    b.add_argument("--sigma1", type=float, default=0.1)
    b.add_argument("--size", type=int, default=257)
    _add_common(b)
    b.set_defaults(fn=_cmd_bench)

    pr = sub.add_parser("probe", help="time-domain kernel estimation")
    pr.add_argument("--system", required=True)
    pr.add_argument("--plan", required=True)
    pr.add_argument("--out", required=True)
    _add_common(pr)
    pr.set_defaults(fn=_cmd_probe)

    rl = sub.add_parser("realize", help="Loewner realization from H1 data")
    rl.add_argument("--measurements", required=True)
    rl.add_argument("--order", default="auto")
    rl.add_argument("--tol", type=float, default=1e-9)
    rl.add_argument("--split", default="interleaved",
                    choices=["interleaved", "block"])
    rl.add_argument("--out", required=True)
    rl.add_argument("--svals", help="CSV for the singular-value decay")
    _add_common(rl)
    rl.set_defaults(fn=_cmd_realize)

    idn = sub.add_parser("identify", help="full quadratic identification")
    idn.add_argument("--measurements", required=True)
    idn.add_argument("--order", default="auto")
    idn.add_argument("--tol", type=float, default=1e-9)
    idn.add_argument("--eta", type=float, default=1e-8)
    idn.add_argument("--eta-ls", type=float, default=None, dest="eta_ls")
    idn.add_argument("--gamma0", type=float, default=1e-9)
    idn.add_argument("--seeds", type=int, default=5)
    idn.add_argument("--project", action="store_true")
    idn.add_argument("--no-scale-rows", dest="scale_rows",
                     action="store_false")
    idn.add_argument("--out", required=True)
    idn.add_argument("--report")
    _add_common(idn)
    idn.set_defaults(fn=_cmd_identify)

    eq = sub.add_parser("equilibrium", help="equilibrium from the DC term")
    eq.add_argument("--model", required=True)
    eq.add_argument("--dc", type=float, required=True)
    eq.add_argument("--out", required=True)
    eq.add_argument("--global-model", dest="global_model")
    _add_common(eq)
    eq.set_defaults(fn=_cmd_equilibrium)

    al = sub.add_parser("align", help="align two realizations")
    al.add_argument("--model-a", required=True)
    al.add_argument("--model-b", required=True)
    al.add_argument("--mode", default="observability",
                    choices=["observability", "qbc"])
    al.add_argument("--out", required=True)
    _add_common(al)
    al.set_defaults(fn=_cmd_align)

    rp = sub.add_parser("repro", help="paper reproduction profiles")
    rp.add_argument("--profile", required=True, choices=list(repro.PROFILES))
    rp.add_argument("--via-probing", action="store_true")
    rp.add_argument("--size", type=int, default=None,
                    help="burgers state dimension (default 257)")
    _add_common(rp)
    rp.set_defaults(fn=_cmd_repro)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    rc = args.fn(args)
    return 0 if rc is None else rc


if __name__ == "__main__":
    _sys.exit(main())
