"""Command-line entry point ``ksplines``.

Subcommands::

    solve               run the flow from a config and write curves, trace, report, plot
    check-compat        compatibility defects of the initial network
    check-complementary determinant sweep of the boundary symbol conditions
    oracle              direct stationary solve (flat manifolds only)
    compare             flow limit against the direct solve
    report              summarize an existing output directory

Exit codes: 0 success, 1 configuration error, 2 flow did not converge,
3 a check ran but failed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from .compatibility import check_compatibility, compatibilize
from .complementary import MISMATCH_TOL, complementary_sweep
from .config import load_config
from .energy import apriori_bounds_check, energy
from .errors import ConfigError, KSplineError, NotConverged
from .flow import initialize_network, run_to_convergence
from .oracle import euclidean_stationary_solve, oracle_vs_flow
from .output import (
    read_trace_jsonl,
    write_curves_csv,
    write_json,
    write_svg,
    write_trace_jsonl,
)

log = logging.getLogger("ksplines")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_CHECK_FAILED = 0, 1, 2, 3


def _load(args):
    if not args.config:
        raise ConfigError("a config file is required", field="--config")
    cfg = load_config(args.config)
    if args.log_every is not None:
        if args.log_every < 1:
            raise ConfigError("must be at least 1", field="--log-every")
        cfg.output.log_every = args.log_every
        cfg.flow = cfg.flow.replace(log_every=args.log_every)
    return cfg


def _out_dir(args, cfg=None):
    if args.out:
        return args.out
    return cfg.output.dir if cfg is not None else "."


def _run_summary(M, state, params, trace):
    first, last = trace[0], trace[-1]
    bounds = [apriori_bounds_check(r, first, params.lam, params.sigma) for r in trace]
    compat = check_compatibility(M, state, params)
    return {
        "converged": trace.converged,
        "steps": trace.steps,
        "rejections": trace.rejections,
        "unchecked_steps": trace.unchecked_steps,
        "max_energy_increase": trace.max_energy_increase,
        "energy_slack_observed": trace.energy_slack_observed,
        "final_dt": trace.final_dt,
        "initial_energy": first.as_dict(),
        "final_energy": last.as_dict(),
        "bounds_hold": all(b.passed for b in bounds),
        "final_defects": compat.group_max(),
        "max_junction_gap": state.max_junction_gap(),
        "max_manifold_distance": state.max_manifold_distance(M),
    }


def cmd_solve(args):
    cfg = _load(args)
    M = cfg.build_manifold()
    params = cfg.flow
    init = initialize_network(M, cfg.point_array(), params)
    every = cfg.output.log_every

    def progress(state, report):
        log.info("t=%.6g total=%.10g Z1=%.3e", report.t, report.total, report.Z1)

    code = EXIT_OK
    try:
        state, trace = run_to_convergence(M, init, params, callback=progress)
    except NotConverged as exc:
        log.warning("%s", exc)
        state, trace = exc.state, exc.trace
        code = EXIT_NOT_CONVERGED
    out = _out_dir(args, cfg)
    o = cfg.output
    write_curves_csv(os.path.join(out, o.curves), state)
    write_trace_jsonl(os.path.join(out, o.trace), trace)
    summary = _run_summary(M, state, params, trace)
    summary["config"] = cfg.to_dict()
    summary["log_every"] = every
    write_json(os.path.join(out, o.report), summary)
    if o.svg:
        write_svg(os.path.join(out, o.svg), state, M, o.view_axis)
    print(f"{'converged' if trace.converged else 'not converged'} after {trace.steps} steps; "
          f"total energy {trace[-1].total:.10g}, Z1 {trace[-1].Z1:.3e}; outputs in {out}")
    return code


def cmd_check_compat(args):
    cfg = _load(args)
    M = cfg.build_manifold()
    init = initialize_network(M, cfg.point_array(), cfg.flow)
    rep = check_compatibility(M, init, cfg.flow, tol=args.tol)
    payload = {"initial": rep.as_dict()}
    if args.pre_flow:
        fixed = compatibilize(M, init, cfg.flow, steps=args.pre_flow)
        payload["after_pre_flow"] = check_compatibility(M, fixed, cfg.flow, tol=args.tol).as_dict()
    write_json(os.path.join(_out_dir(args, cfg), "compatibility.json"), payload)
    for name, value in rep.group_max().items():
        print(f"{name:18s} {value:.3e}")
    print(f"total {rep.total:.3e}  verdict {'compatible' if rep.verdict else 'incompatible'}")
    return EXIT_OK


def cmd_check_complementary(args):
    ks = args.k or [2, 3, 4]
    sigmas = args.sigma or [0.1, 1.0, 10.0]
    if any(k < 2 for k in ks):
        raise ConfigError("must be at least 2", field="--k")
    if any(not s > 0 for s in sigmas):
        raise ConfigError("must be positive", field="--sigma")
    reports = complementary_sweep(ks, sigmas, args.samples)
    worst = max(r.rel_err for r in reports)
    ok = all(r.nonvanishing for r in reports) and worst <= MISMATCH_TOL
    payload = {
        "ks": ks, "sigmas": sigmas, "samples": args.samples,
        "all_nonvanishing": all(r.nonvanishing for r in reports),
        "max_rel_err": worst,
        "min_abs_detE": min(abs(r.detE) for r in reports),
        "reports": [r.as_dict() for r in reports],
    }
    write_json(os.path.join(_out_dir(args), "complementary.json"), payload)
    print(f"{len(reports)} samples, max rel err {worst:.2e}, "
          f"min |det E| {payload['min_abs_detE']:.2e}, nonvanishing={payload['all_nonvanishing']}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _require_flat(cfg):
    if cfg.manifold["kind"] != "euclidean":
        raise ConfigError("the direct solver needs a euclidean manifold", field="manifold.kind")


def cmd_oracle(args):
    cfg = _load(args)
    _require_flat(cfg)
    params = cfg.flow
    M = cfg.build_manifold()
    init = initialize_network(M, cfg.point_array(), params)
    n_dense = args.n_dense or params.N
    sol = euclidean_stationary_solve(cfg.point_array(), params.k, params.lam, params.sigma, n_dense,
                                     init.boundary_data, return_residual=True, method=args.method)
    out = _out_dir(args, cfg)
    write_curves_csv(os.path.join(out, "oracle_curves.csv"), sol.state)
    e = energy(M, sol.state, params.replace(N=n_dense))
    write_json(os.path.join(out, "oracle.json"), {
        "method": args.method, "N_dense": n_dense, "residual": sol.residual / sol.scale,
        "energy": e.as_dict(),
    })
    print(f"direct solve on {n_dense} intervals per segment, total energy {e.total:.10g}")
    return EXIT_OK


def cmd_compare(args):
    cfg = _load(args)
    _require_flat(cfg)
    p = cfg.flow
    try:
        res = oracle_vs_flow(cfg.point_array(), p.k, p.lam, p.sigma, p, N_dense=args.n_dense, method=args.method)
    except NotConverged as exc:
        log.warning("%s", exc)
        return EXIT_NOT_CONVERGED
    payload = {key: val for key, val in res.items() if not key.endswith("_state")}
    write_json(os.path.join(_out_dir(args, cfg), "compare.json"), payload)
    print(f"relative L-inf gap {res['linf_rel']:.3e} after {res['flow_steps']} flow steps")
    return EXIT_OK


def cmd_report(args):
    import json

    out = args.out or (load_config(args.config).output.dir if args.config else ".")
    names = ("trace.jsonl", "report.json")
    if args.config:
        o = load_config(args.config).output
        names = (o.trace, o.report)
    trace_path, report_path = (os.path.join(out, n) for n in names)
    if not os.path.exists(report_path):
        raise ConfigError(f"no run report at {report_path}", field="--out")
    with open(report_path, encoding="utf-8") as fh:
        rep = json.load(fh)
    trace = read_trace_jsonl(trace_path) if os.path.exists(trace_path) else []
    totals = np.array([r["total"] for r in trace])
    rises = np.diff(totals)
    print(f"converged: {rep['converged']}  steps: {rep['steps']}  rejections: {rep['rejections']}")
    e = rep["final_energy"]
    print(f"final: total {e['total']:.10g}  E_k {e['E_k']:.6g}  T_gamma {e['T_gamma']:.6g}  "
          f"T_chi {e['T_chi']:.6g}  Z1 {e['Z1']:.3e}")
    print(f"bounds hold: {rep['bounds_hold']}  max junction gap {rep['max_junction_gap']:.2e}")
    if len(totals) > 1:
        print(f"trace records: {len(totals)}  largest increase of total: {max(rises.max(), 0.0):.3e}")
    for name, value in rep["final_defects"].items():
        print(f"  {name:18s} {value:.3e}")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    common.add_argument("--threads", type=int, default=None, metavar="K", help="limit BLAS threads")
    common.add_argument("--log-every", type=int, default=None, metavar="S", help="trace cadence in steps")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="ksplines", description="Geometric k-spline fitting by gradient flow")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="run the flow").set_defaults(func=cmd_solve)

    p = sub.add_parser("check-compat", parents=[common], help="compatibility of the initial network")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--pre-flow", type=int, default=0, metavar="STEPS", help="also report after a pre-flow")
    p.set_defaults(func=cmd_check_compat)

    p = sub.add_parser("check-complementary", parents=[common], help="boundary symbol determinant sweep")
    p.add_argument("--k", type=int, action="append", help="order; repeatable (default 2 3 4)")
    p.add_argument("--sigma", type=float, action="append", help="weight; repeatable (default 0.1 1 10)")
    p.add_argument("--samples", type=int, default=50)
    p.set_defaults(func=cmd_check_complementary)

    for name, func, text in (("oracle", cmd_oracle, "direct stationary solve"),
                             ("compare", cmd_compare, "flow against direct solve")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--n-dense", type=int, default=None)
        p.add_argument("--method", choices=("fd", "basis"), default="fd")
        p.set_defaults(func=func)

    sub.add_parser("report", parents=[common], help="summarize a run directory").set_defaults(func=cmd_report)
    return parser


def cli(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.threads is not None and args.threads < 1:
        print("error: --threads: must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KSplineError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
