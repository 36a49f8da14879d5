"""Command-line interface: ``semisplit {calc,reproduce,run}``.

Exit codes: 0 success, 1 a reproduction check failed, 2 usage or validation error.
"""

import argparse
import json
import logging
import math
import os
import sys
import warnings

import jsonschema
import numpy as np

from . import semicalc as sc
from .catalog import nonsmooth_problem, saddle_operators, stationary_problem, toy_certificate, toy_operator
from .drs import DRSConfig, SaddleDRS, gamma_range_minty, gamma_range_semi, run_drs, spectral_lambda_bar_saddle
from .errors import AssumptionViolated, RelaxationWarning, SemiSplitError
from .operators import ResolventSelection
from .pppa import Fixed, FractionOfTwoAlpha, PPPAConfig, Preconditioner, run_pppa
from .reproduce import EXPERIMENTS, reproduce
from .semicalc import GammaInterval, SemiParams

log = logging.getLogger("semisplit")

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "lambda"],
    "properties": {
        "problem": {"enum": list(EXPERIMENTS)},
        "gamma": {"type": "number", "exclusiveMinimum": 0},
        "lambda": {
            "type": "object",
            "additionalProperties": False,
            "required": ["rule", "value"],
            "properties": {
                "rule": {"enum": ["fixed", "fraction_of_two_alpha"]},
                "value": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "s0": {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]},
        "init_grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["lo", "hi", "count"],
            "properties": {
                "lo": {"type": "number"},
                "hi": {"type": "number"},
                "count": {"type": "integer", "minimum": 1},
            },
        },
        "max_iters": {"type": "integer", "minimum": 1},
        "stop_tol": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "selection": {"enum": ["deterministic", "uniform"]},
    },
    "not": {"required": ["s0", "init_grid"]},
}


def _fmt(x):
    return "inf" if math.isinf(x) else f"{x:.12g}"


def _params(mu, rho):
    return f"(mu, rho) = ({_fmt(mu)}, {_fmt(rho)})"


# -- calc -------------------------------------------------------------------------


def cmd_calc(args):
    op = args.op
    if op == "parallel-sum":
        print(_fmt(sc.parallel_sum(args.a, args.b)))
    elif op == "quadratic-range":
        print(sc.positive_quadratic_range(args.a, args.b, args.c))
    elif op == "existence":
        print(sc.existence_class(SemiParams(args.mu, args.rho)).name)
    elif op == "inverse":
        print(_params(*sc.inverse_params(SemiParams(args.mu, args.rho))))
    elif op == "sum":
        print(_params(*sc.sum_params(SemiParams(args.muA, args.rhoA), SemiParams(args.muB, args.rhoB))))
    elif op == "parallel-sum-params":
        print(_params(*sc.parallel_sum_params(SemiParams(args.muA, args.rhoA), SemiParams(args.muB, args.rhoB))))
    elif op == "shift":
        p, kind = sc.shift_identity_params(SemiParams(args.mu, args.rho), args.alpha, args.c)
        print(f"{_params(*p)} {kind.name}")
    elif op == "embedding":
        xi, nu = sc.monotone_embedding(SemiParams(args.mu, args.rho))
        print(f"(xi, nu) = ({_fmt(xi)}, {_fmt(nu)})")
    elif op == "resolvent-range":
        print(sc.resolvent_gamma_range(SemiParams(args.mu, args.rho)))
    elif op == "lipschitz":
        print(_fmt(sc.resolvent_lipschitz(SemiParams(args.mu, args.rho), args.gamma)))
    elif op == "gamma-range-semi":
        pA, pB = SemiParams(args.muA, args.rhoA), SemiParams(args.muB, args.rhoB)
        print(gamma_range_semi(pA, pB, enforce_domain=args.enforce_domain))
    elif op == "gamma-range-minty":
        print(gamma_range_minty(args.beta_P, args.beta_D))
    return 0


def _add_calc(sub):
    p = sub.add_parser("calc", help="semimonotone parameter calculus")
    ops = p.add_subparsers(dest="op", required=True)

    def pair(q, *names):
        for n in names:
            q.add_argument(f"--{n}", type=float, required=True)

    q = ops.add_parser("parallel-sum")
    q.add_argument("a", type=float)
    q.add_argument("b", type=float)
    q = ops.add_parser("quadratic-range")
    for n in "abc":
        q.add_argument(n, type=float)
    for name in ("existence", "inverse", "embedding", "resolvent-range"):
        pair(ops.add_parser(name), "mu", "rho")
    pair(ops.add_parser("sum"), "muA", "rhoA", "muB", "rhoB")
    pair(ops.add_parser("parallel-sum-params"), "muA", "rhoA", "muB", "rhoB")
    q = ops.add_parser("shift")
    pair(q, "mu", "rho", "alpha")
    q.add_argument("--c", type=float, default=None)
    pair(ops.add_parser("lipschitz"), "mu", "rho", "gamma")
    q = ops.add_parser("gamma-range-semi")
    pair(q, "muA", "rhoA", "muB", "rhoB")
    q.add_argument("--enforce-domain", action="store_true")
    q = ops.add_parser("gamma-range-minty")
    q.add_argument("--beta-P", dest="beta_P", type=float, required=True)
    q.add_argument("--beta-D", dest="beta_D", type=float, required=True)
    p.set_defaults(func=cmd_calc)


# -- reproduce ----------------------------------------------------------------------


def cmd_reproduce(args):
    out = args.out or os.path.join("out", args.example)
    kwargs = {}
    if args.max_iters is not None:
        kwargs["max_iters"] = args.max_iters
    if args.tol is not None:
        kwargs["tol"] = args.tol
    checks = reproduce(args.example, out, seed=args.seed, **kwargs)
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print(f"{'PASS' if ok else 'FAIL'} {args.example}: {sum(c.passed for c in checks)}/{len(checks)} checks, summary in {out}")
    return 0 if ok else 1


# -- run ---------------------------------------------------------------------------------


class ConfigError(ValueError):
    pass


def _window(problem):
    if problem == "nonsmooth-min":
        return nonsmooth_problem().gamma_window()
    if problem == "stationary":
        return stationary_problem().gamma_window()
    if problem == "saddle-drs":
        return GammaInterval(0.25, 1.0)  # gamma between -b/a^2 and -1/b for a = 2, b = -1
    return GammaInterval(0.0, math.inf)


def _inits(cfg, dim):
    if "init_grid" in cfg:
        g = cfg["init_grid"]
        pts = np.linspace(g["lo"], g["hi"], g["count"])
        return [np.full(dim, p) for p in pts]
    s0 = cfg.get("s0", 1.0)
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    if s0.size == 1:
        s0 = np.full(dim, s0[0])
    if s0.size != dim:
        raise ConfigError(f"s0: expected {dim} components, got {s0.size}")
    return [s0]


def execute_config(cfg, out):
    """Run a validated experiment config; returns the list of written files."""
    problem = cfg["problem"]
    gamma = cfg.get("gamma", 1.0 if problem == "toy-ppa" else None)
    if gamma is None:
        raise ConfigError("gamma: required for splitting problems")
    window = _window(problem)
    if gamma not in window:
        raise ConfigError(f"gamma: {gamma} lies outside the admissible interval {window}")
    lam_cfg = cfg["lambda"]
    if lam_cfg["rule"] == "fixed":
        rule = Fixed(lam_cfg["value"])
    else:
        if not lam_cfg["value"] < 1:
            raise ConfigError("lambda.value: fraction must lie in (0, 1)")
        rule = FractionOfTwoAlpha(lam_cfg["value"])
    seed = cfg.get("seed", 0)
    mode = cfg.get("selection", "uniform" if problem == "stationary" else "deterministic")
    selection = ResolventSelection(mode, seed)
    max_iters, stop_tol = cfg.get("max_iters", 1000), cfg.get("stop_tol", 1e-10)
    os.makedirs(out, exist_ok=True)
    written, rows = [], []
    if problem == "toy-ppa":
        T, cert = toy_operator(), toy_certificate()
        P = Preconditioner.from_matrix(np.eye(2) / gamma)
        pcfg = PPPAConfig(rule, max_iters, stop_tol, selection)
        for i, x0 in enumerate(_inits(cfg, 2)):
            tr = run_pppa(T, P, cert.V, cert, x0, pcfg, rng=np.random.default_rng(seed))
            path = os.path.join(out, f"trace_{i:03d}.csv")
            tr.to_csv(path)
            written.append(path)
            rows.append({"init": x0.tolist(), "status": tr.status, "iterations": len(tr), "final_residual": tr.vbar_norm[-1]})
    else:
        if problem == "saddle-drs":
            A, B = saddle_operators()
            cert, dim = None, 2
            if not isinstance(rule, Fixed):
                raise ConfigError("lambda.rule: the saddle problem has no certificate; use a fixed relaxation")
            bar = spectral_lambda_bar_saddle(2.0, -1.0, gamma)
            if bar is not None and rule.value >= bar:
                log.warning("relaxation %.6g is not below the spectral threshold %.6g", rule.value, bar)
        else:
            prob = nonsmooth_problem() if problem == "nonsmooth-min" else stationary_problem()
            A, B, cert, dim = prob.A, prob.B, prob.cert, 1
        dcfg = DRSConfig(gamma, rule, max_iters, stop_tol, selection)
        for i, s0 in enumerate(_inits(cfg, dim)):
            tr = run_drs(A, B, cert, s0, dcfg)
            path = os.path.join(out, f"trace_{i:03d}.csv")
            tr.to_csv(path)
            written.append(path)
            rows.append({"init": s0.tolist(), "status": tr.status, "iterations": len(tr), "final_residual": tr.residual[-1]})
    summary = os.path.join(out, "runs.json")
    with open(summary, "w") as fh:
        json.dump({"config": cfg, "runs": rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(summary)
    return written


def load_config(path, overrides=None):
    with open(path) as fh:
        cfg = json.load(fh)
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        field = "/".join(str(p) for p in exc.absolute_path) or "(root)"
        raise ConfigError(f"{field}: {exc.message}") from exc
    return cfg


def cmd_run(args):
    overrides = {"seed": args.seed if args.seed_given else None, "max_iters": args.max_iters, "stop_tol": args.tol}
    cfg = load_config(args.config, overrides)
    out = args.out or os.path.splitext(os.path.basename(args.config))[0] + "_out"
    for path in execute_config(cfg, out):
        print(path)
    return 0


# -- entry point --------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="semisplit", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_calc(sub)

    def common(p):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)

    p = sub.add_parser("reproduce", help="run a reference experiment and its checks")
    p.add_argument("example", choices=list(EXPERIMENTS))
    common(p)
    p.set_defaults(func=cmd_reproduce)
    p = sub.add_parser("run", help="run an experiment described by a JSON config")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command in ("reproduce", "run"):
        args.seed_given = args.seed is not None
        if args.seed is None:
            args.seed = 0
    if not args.verbose:
        warnings.simplefilter("ignore", RelaxationWarning)
    try:
        return args.func(args)
    except AssumptionViolated as exc:
        print(f"error: assumption '{exc.clause}' violated: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, SemiSplitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
