"""Command-line front end: evaluate kernels, run verification suites,
launch simulations.

Exit codes: 0 success, 2 usage or parameter error, 3 numeric failure
(non-convergence or sampler failure).  CSV output is RFC-4180 with a
header row and 17-significant-digit floats; JSON reports are one
document per run and embed the full configuration, so re-running with
the embedded values reproduces the artifact.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .brownian import (PathSample, chapman_kolmogorov_mc, continuity_moment_mc,
                       estimator_report, feynman_kac_estimate, moment_check_mc,
                       sample_path, write_paths_csv)
from .errors import ConvergenceError, DomainError, SamplerError
from .ikernel import IKernelArgs, ikernel
from .kernels import (DeformParams, PolarPoint, fourier_kernel, heat_kernel,
                      laguerre_semigroup_kernel)
from .verify import run_suite

_FMT = "%.17g"


def _out_path(args, default_name):
    base = args.output or os.environ.get("ADEFORM_OUT_DIR", ".")
    if args.output and not os.path.isdir(base):
        return args.output
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, default_name)


def _parse_vec(text):
    return np.array([float(v) for v in text.split(",")], dtype=float)


def _config_echo(args):
    return {k: v for k, v in vars(args).items() if k != "func" and v is not None}


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([_FMT % v if isinstance(v, float) else v for v in row])


def cmd_eval(args):
    params = DeformParams(args.a, args.N) if args.subject != "scripti" else None
    rows = []
    if args.subject == "scripti":
        res = ikernel(IKernelArgs(args.b, args.nu, complex(args.w_re, args.w_im),
                                  args.t))
        rows.append((args.b, args.nu, args.w_re, args.w_im, args.t,
                     float(res.value.real), float(res.value.imag), res.method,
                     res.terms_or_nodes, res.err_estimate))
        header = ["b", "nu", "w_re", "w_im", "t", "value_re", "value_im",
                  "method", "terms_or_nodes", "err_estimate"]
    else:
        x = PolarPoint.from_cartesian(_parse_vec(args.x))
        y = PolarPoint.from_cartesian(_parse_vec(args.y))
        if args.subject == "heat-kernel":
            val = heat_kernel(params, x, y, args.t)
            rows.append((args.a, args.N, args.x, args.y, args.t, val, 0.0))
        elif args.subject == "fourier-kernel":
            val = fourier_kernel(params, x, y)
            rows.append((args.a, args.N, args.x, args.y, 0.0,
                         float(np.real(val)), float(np.imag(val))))
        elif args.subject == "laguerre-kernel":
            val = laguerre_semigroup_kernel(params, x, y,
                                            complex(args.z_re, args.z_im))
            rows.append((args.a, args.N, args.x, args.y, args.z_re,
                         float(np.real(val)), float(np.imag(val))))
        header = ["a", "N", "x", "y", "t_or_z", "value_re", "value_im"]
    for row in rows:
        print(", ".join(_FMT % v if isinstance(v, float) else str(v)
                        for v in row))
    if args.output:
        _write_rows(_out_path(args, f"eval_{args.subject}.csv"), header, rows)
    return 0


def cmd_verify(args):
    params = DeformParams(args.a, args.N)
    checks = run_suite(args.suite, params, quick=args.quick)
    report = {
        "suite": args.suite,
        "config": _config_echo(args),
        "checks": [c.to_json() for c in checks],
        "passed": all(c.passed for c in checks),
    }
    text = json.dumps(report, indent=2)
    print(text)
    if args.output:
        with open(_out_path(args, f"verify_{args.suite}.json"), "w") as fh:
            fh.write(text + "\n")
    return 0 if report["passed"] else 3


def cmd_simulate(args):
    params = DeformParams(args.a, args.N)
    x0 = (PolarPoint.from_cartesian(np.zeros(params.N)) if args.x0 == "origin"
          else PolarPoint.from_cartesian(_parse_vec(args.x0)))
    if args.kind == "paths":
        times = np.linspace(0.0, args.t, args.steps + 1)
        samples = [sample_path(params, x0, times, args.seed, stream)
                   for stream in range(args.paths)]
        path = _out_path(args, "paths.csv")
        write_paths_csv(path, samples)
        print(f"wrote {args.paths} paths to {path}")
        return 0
    if args.kind == "moments":
        est, sig, closed = moment_check_mc(params, x0, args.t, args.paths,
                                           args.steps, args.seed)
        rec = estimator_report(est, sig, args.paths, args.steps, args.seed,
                               extra={"closed_form": closed,
                                      "z_score": (est - closed) / sig,
                                      "config": _config_echo(args)})
        text = json.dumps(rec, indent=2)
        print(text)
        if args.output:
            with open(_out_path(args, "moments.json"), "w") as fh:
                fh.write(text + "\n")
        return 0
    if args.kind == "continuity":
        t_list = np.geomspace(1e-3, 1e-1, 6)
        rows, slope = continuity_moment_mc(params, x0, args.t, t_list,
                                           args.paths, args.seed)
        header = ["t", "alpha4_mean", "stderr"]
        print(f"log-log slope: {slope:.4f}")
        for row in rows:
            print(", ".join(_FMT % v for v in row))
        if args.output:
            _write_rows(_out_path(args, "continuity.csv"), header, rows)
        return 0
    if args.kind == "feynman-kac":
        if args.V == "oscillator":
            cap = 10.0 ** params.a / params.a
            V = lambda pts: np.minimum(
                np.linalg.norm(pts, axis=1) ** params.a / params.a, cap)
        elif args.V == "zero":
            V = lambda pts: np.zeros(pts.shape[0])
        else:
            c = float(args.V)
            V = lambda pts: np.full(pts.shape[0], c)
        if args.f == "ground":
            # oscillator ground state (normalization cancels in the ratio)
            f = lambda pts: np.exp(-np.linalg.norm(pts, axis=1) ** params.a
                                   / params.a)
        else:
            f = lambda pts: np.ones(pts.shape[0])
        est, sig = feynman_kac_estimate(params, V, f, x0, args.t, args.paths,
                                        args.steps, args.seed)
        rec = estimator_report(est, sig, args.paths, args.steps, args.seed,
                               extra={"config": _config_echo(args)})
        if args.V == "oscillator" and args.f == "ground":
            f0 = float(f(x0.cartesian[None, :])[0])
            rate = -np.log(est / f0) / args.t
            rec["decay_rate"] = float(rate)
            rec["expected_rate"] = params.lambda_a + 1.0
        text = json.dumps(rec, indent=2)
        print(text)
        if args.output:
            with open(_out_path(args, "feynman_kac.json"), "w") as fh:
                fh.write(text + "\n")
        return 0
    raise DomainError(f"unknown simulation kind {args.kind!r}")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="adeform",
        description="deformed heat kernels, flows, and path sampling")
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate one kernel at one point")
    pe.add_argument("subject", choices=["scripti", "fourier-kernel",
                                        "heat-kernel", "laguerre-kernel"])
    pe.add_argument("--a", type=float, default=1.0)
    pe.add_argument("--N", type=int, default=3)
    pe.add_argument("--b", type=float, default=1.0)
    pe.add_argument("--nu", type=float, default=0.5)
    pe.add_argument("--w", dest="w_re", type=float, default=0.0)
    pe.add_argument("--w-im", dest="w_im", type=float, default=0.0)
    pe.add_argument("--t", type=float, default=1.0)
    pe.add_argument("--x", type=str, default="0,0,0")
    pe.add_argument("--y", type=str, default="1,0,0")
    pe.add_argument("--z", dest="z_re", type=float, default=0.5)
    pe.add_argument("--z-im", dest="z_im", type=float, default=0.0)
    pe.add_argument("--output", type=str, default=None)
    pe.set_defaults(func=cmd_eval)

    pv = sub.add_parser("verify", help="run a named verification suite")
    pv.add_argument("suite", choices=["specfun", "scripti", "kernel-identities",
                                      "heatflow", "brownian", "all"])
    pv.add_argument("--a", type=float, default=1.0)
    pv.add_argument("--N", type=int, default=3)
    pv.add_argument("--quick", action="store_true",
                    help="reduced grids and path counts")
    pv.add_argument("--output", type=str, default=None)
    pv.set_defaults(func=cmd_verify)

    ps = sub.add_parser("simulate", help="run a Monte Carlo simulation")
    ps.add_argument("kind", choices=["paths", "feynman-kac", "moments",
                                     "continuity"])
    ps.add_argument("--a", type=float, default=1.0)
    ps.add_argument("--N", type=int, default=3)
    ps.add_argument("--x0", type=str, default="origin")
    ps.add_argument("--t", type=float, default=1.0)
    ps.add_argument("--paths", type=int, default=10000)
    ps.add_argument("--steps", type=int, default=32)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--V", type=str, default="zero")
    ps.add_argument("--f", type=str, default="ground")
    ps.add_argument("--output", type=str, default=None)
    ps.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValueError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, SamplerError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
