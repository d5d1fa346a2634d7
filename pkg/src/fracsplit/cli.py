"""Command-line entry point: ``fracsplit {generate,solve,bench,verify}``.

Results go to stdout as JSON (or to the requested files).  Failures exit
nonzero with a one-line JSON object on stderr::

    {"error": "DenominatorViolationError", "message": "...", "command": "solve"}
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import harness
from .exceptions import FracsplitError
from .problems import ANALYTIC_TAGS, FAMILIES, GeneratorSpec, dumps_instance, generate, load_instance
from .solvers import RECORD_DIM_LIMIT
from .verification import SUITES, run_suites

EXIT_OK, EXIT_ERROR, EXIT_CHECK_FAILED = 0, 1, 3


def _add_dims(parser):
    parser.add_argument("--k", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--p", type=int)
    parser.add_argument("--seed", type=int)


def _spec_from_args(args):
    if args.family in ("analytic_1d", "analytic_2d"):
        if args.which is None:
            raise FracsplitError("--which is required for analytic families")
        return GeneratorSpec(args.family, {"which": args.which}, 0)
    needed = harness.FAMILY_DEFAULTS[args.family]["dims"]
    dims = {d: getattr(args, d) if getattr(args, d) is not None else v for d, v in needed.items()}
    return GeneratorSpec(args.family, dims, args.seed or 0)


def cmd_generate(args):
    text = dumps_instance(generate(_spec_from_args(args)))
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_solve(args):
    if args.instance:
        program = load_instance(args.instance)
    elif args.family:
        program = generate(_spec_from_args(args))
    else:
        raise FracsplitError("give --instance PATH or --family")
    eta = args.eta
    if eta is None and args.method != "dinkelbach":
        spec = program.metadata.get("spec")
        family = spec.family if spec is not None else None
        eta = harness.FAMILY_DEFAULTS.get(family, {}).get("eta", "harmonic:0.1")
    method = harness.MethodConfig(args.method, args.method, eta, args.operator,
                                  args.inner_iters, args.alpha_scale)
    x0 = None if args.x0 is None else np.array([float(v) for v in args.x0.split(",")])
    state, trace, prog = harness.run_method(program, method, args.stop, x0=x0)
    if args.out:
        trace.to_csv(args.out)
    report = {
        "method": args.method,
        "status": trace.status,
        "iterations": len(trace),
        "theta": float(state.theta),
        "best_theta": float(state.best_theta),
        "feasibility": float(prog.feasibility(state.x)),
        "elapsed_s": float(trace["elapsed_s"][-1]) if len(trace) else 0.0,
    }
    if prog.dim <= RECORD_DIM_LIMIT:
        report["x"] = state.x.tolist()
    print(json.dumps(report))
    return EXIT_OK


def cmd_bench(args):
    overrides = {
        "family": args.family, "k": args.k, "m": args.m, "p": args.p, "seed": args.seed,
        "trials": args.trials, "stop": args.stop, "out": args.out, "workers": args.workers,
        "method": args.method, "eta": args.eta,
        "identity_first": True if args.identity_first else None,
    }
    cfg = harness.load_config(args.config, **overrides)
    result = harness.run_experiment(cfg)
    print(json.dumps({"out": cfg.out, "summary": result.summary}))
    return EXIT_OK


def cmd_verify(args):
    checks = run_suites(args.suite, seed=args.seed or 0)
    for c in checks:
        print(json.dumps(c.as_dict()))
    failed = [c.name for c in checks if not c.passed]
    if failed:
        _diagnose("verify", "CheckFailed", f"{len(failed)} check(s) failed", failed=failed)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="fracsplit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write an instance file")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--which", choices=ANALYTIC_TAGS)
    _add_dims(g)
    g.add_argument("-o", "--out", help="output path (default stdout)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one method on one instance")
    s.add_argument("--instance", help="instance file from `generate`")
    s.add_argument("--family", choices=FAMILIES)
    s.add_argument("--which", choices=ANALYTIC_TAGS)
    _add_dims(s)
    s.add_argument("--method", default="fssm", choices=harness.SOLVERS)
    s.add_argument("--eta", type=str, help="step schedule, e.g. harmonic:0.1 or const:1e-3")
    s.add_argument("--stop", default="iters:1000", help="e.g. iters:1000,time:2,rel:1e-5")
    s.add_argument("--operator", help="operator variant, e.g. cyclic or simultaneous")
    s.add_argument("--x0", help="comma-separated start point")
    s.add_argument("--inner-iters", type=int, default=10)
    s.add_argument("--alpha-scale", type=float, default=3e-6)
    s.add_argument("-o", "--out", help="trace CSV path")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run an experiment and write CSV")
    b.add_argument("--config", help="INI experiment file")
    b.add_argument("--family", choices=sorted(harness.FAMILY_DEFAULTS))
    _add_dims(b)
    b.add_argument("--trials", type=int)
    b.add_argument("--method", action="append", help="method name (repeatable)")
    b.add_argument("--eta", type=str, help="override every method's step schedule")
    b.add_argument("--stop", type=str)
    b.add_argument("--out", type=str)
    b.add_argument("--workers", type=int)
    b.add_argument("--identity-first", action="store_true",
                   help="sweep identity-operator terms first (sum_linear_ratios)")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run diagnostic suites")
    v.add_argument("--suite", action="append", choices=sorted(SUITES) + ["all"])
    v.add_argument("--seed", type=int)
    v.set_defaults(func=cmd_verify)
    return parser


def _diagnose(command, error, message, **extra):
    sys.stderr.write(json.dumps({"error": error, "message": message, "command": command}
                                | extra) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FracsplitError, ValueError, KeyError, OSError, ArithmeticError) as exc:
        extra = {}
        for attr in ("component", "value"):
            v = getattr(exc, attr, None)
            if isinstance(v, (int, float)):
                extra[attr] = v
        _diagnose(args.command, type(exc).__name__, str(exc), **extra)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
