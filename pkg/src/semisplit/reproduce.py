"""Reference experiments: each returns named checks and writes CSV artifacts.

Check names are a stable contract; see the README for the list.
"""

import json
import math
import os
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .catalog import nonsmooth_problem, saddle_operators, stationary_problem, toy_certificate, toy_operator
from .drs import (
    DRSConfig,
    SaddleDRS,
    ToyPPA,
    alpha_drs,
    drs_rate_certificate,
    equivalence_check,
    find_crossing,
    gamma_range_semi,
    nonmonotonicity_report,
    run_drs,
    spectral_lambda_bar_saddle,
    spectral_lambda_bar_toy,
    spectral_scan,
)
from .errors import RelaxationWarning
from .operators import ResolventSelection, full_domain_gamma_set, zero_residual
from .pppa import Fixed, PPPAConfig, Preconditioner, rate_certificate, rlinear_fit, run_pppa

__all__ = ["Check", "EXPERIMENTS", "reproduce", "write_scan"]


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    target: float
    slack: float

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: value={self.value:.12g} target={self.target:.12g} slack={self.slack:.3e}"


def _check_le(name, value, bound):
    return Check(name, bool(value <= bound), float(value), float(bound), float(bound - value))


def _check_close(name, value, target, tol):
    err = abs(value - target)
    return Check(name, bool(err <= tol), float(value), float(target), float(tol - err))


def write_scan(path, rows, gamma=math.nan):
    with open(path, "w") as fh:
        fh.write("lambda,gamma,spectral_radius,converged_flag\n")
        for lam, rad in rows:
            fh.write(f"{lam:.17g},{gamma:.17g},{rad:.17g},{int(rad < 1)}\n")


def _sum_sq(values):
    return float(np.sum(np.square(values)))


def toy_ppa(out, seed=0, max_iters=10000, tol=1e-10, n_inits=24):
    a, b = 2.0, 1.0
    checks = []
    builder = ToyPPA(a, b)
    lam_bar = spectral_lambda_bar_toy(a, b)
    write_scan(os.path.join(out, "scan.csv"), spectral_scan(builder, np.linspace(0.05, 4.0, 80)))
    checks.append(_check_close("lambda_bar_crossing", find_crossing(builder, 2.0, 3.0), lam_bar, 1e-6))

    T, P, cert = toy_operator(a, b), Preconditioner.identity(2), toy_certificate(a, b)
    rng = np.random.default_rng(seed)
    worst_res, worst_gap = 0.0, math.inf
    for i, x0 in enumerate(rng.uniform(-2.0, 2.0, (n_inits, 2))):
        tr = run_pppa(T, P, cert.V, cert, x0, PPPAConfig(Fixed(2.3), max_iters=max_iters, stop_tol=tol), rng=rng)
        tr.to_csv(os.path.join(out, f"converge_{i:03d}.csv"))
        worst_res = max(worst_res, zero_residual(T, tr.xbar[-1]))
        worst_gap = min([worst_gap] + tr.fejer_gap)
    checks.append(_check_le("converge_lambda_2.3", worst_res, 1e-6))
    checks.append(Check("fejer_gaps", worst_gap >= -1e-9, worst_gap, -1e-9, worst_gap + 1e-9))

    biggest = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RelaxationWarning)
        for x0 in rng.uniform(-10.0, 10.0, (n_inits, 2)):
            tr = run_pppa(T, P, cert.V, cert, x0, PPPAConfig(Fixed(2.5), max_iters=max_iters, divergence_norm=1e3), validate=False)
            biggest = max(biggest, float(np.linalg.norm(tr.x[-1])))
            if biggest > 1e3:
                break
    checks.append(Check("diverge_lambda_2.5", biggest > 1e3, biggest, 1e3, biggest - 1e3))

    lin = toy_operator(a, b, "constant")
    tr = run_pppa(lin, P, cert.V, cert, np.array([1.0, 1.0]), PPPAConfig(Fixed(1.0), max_iters=100, stop_tol=0.0))
    lhs, rhs, _ = rate_certificate(tr, cert, P)
    checks.append(_check_le("rate_bound", lhs, rhs))
    return checks


def saddle_drs(out, seed=0, max_iters=2000, tol=1e-10):
    a, b, gamma = 2.0, -1.0, 0.5
    checks = []
    builder = SaddleDRS(a, b, gamma)
    write_scan(os.path.join(out, "scan.csv"), spectral_scan(builder, np.linspace(0.01, 1.0, 100)), gamma)
    lam_bar = spectral_lambda_bar_saddle(a, b, gamma)
    checks.append(_check_close("lambda_bar_crossing", find_crossing(builder, 0.01, 1.0), lam_bar, 1e-6))
    traces = nonmonotonicity_report(a, b)
    checks.append(_check_close("nonmonotonicity_traces", max(abs(t + 2.0) for t in traces), 0.0, 1e-12))

    A, B = saddle_operators(a, b)
    rng = np.random.default_rng(seed)
    s0 = rng.uniform(-1.0, 1.0, 2)
    tr = run_drs(A, B, None, s0, DRSConfig(gamma, Fixed(0.3), max_iters=max_iters, stop_tol=tol))
    tr.to_csv(os.path.join(out, "trace.csv"))
    checks.append(_check_le("converge_lambda_0.3", tr.residual[-1], 1e-6))
    z0 = rng.uniform(-1.0, 1.0, 4)
    dev = equivalence_check(A, B, None, z0, DRSConfig(gamma, Fixed(0.3)), horizon=100)
    checks.append(_check_le("equivalence", dev, 1e-10))
    return checks


def nonsmooth_min(out, seed=0, max_iters=500, tol=0.0):
    prob = nonsmooth_problem()
    cert = prob.cert
    checks = []
    window = gamma_range_semi(prob.pA, prob.pB)
    checks.append(_check_close("gamma_range_upper", window.hi, 0.26146, 5e-5))
    sets = full_domain_gamma_set(prob.A)
    covered = lambda g: any(g in iv for iv in sets)
    excluded = not covered(1.0) and covered(0.5) and covered(1.5)
    checks.append(Check("full_domain_gamma_1_excluded", excluded, 1.0, 1.0, 0.0))

    gamma = 0.13
    alpha = alpha_drs(gamma, cert.beta_P, cert.beta_D)
    rng = np.random.default_rng(seed)
    s0 = rng.uniform(-3.0, 3.0, 1)
    tr = run_drs(prob.A, prob.B, cert, s0, DRSConfig(gamma, Fixed(alpha), max_iters=max_iters, stop_tol=tol))
    tr.to_csv(os.path.join(out, "trace.csv"))
    lhs, rhs, _ = drs_rate_certificate(tr, cert, kappa=alpha * alpha)
    checks.append(_check_le("rate_bound", lhs, rhs))
    gaps = list(tr.fejer_gap)
    for s in np.linspace(-4.0, 4.0, 9):
        gaps += run_drs(prob.A, prob.B, cert, [s], DRSConfig(gamma, Fixed(alpha), max_iters=200)).fejer_gap
    worst = min(gaps)
    checks.append(Check("fejer_gaps", worst >= -1e-9, worst, -1e-9, worst + 1e-9))
    checks.append(_check_le("residual_square_sum", _sum_sq(tr.residual), 1e6))
    dev = equivalence_check(prob.A, prob.B, cert, rng.uniform(-2.0, 2.0, 2), DRSConfig(gamma, Fixed(alpha)), 100)
    checks.append(_check_le("equivalence", dev, 1e-10))
    return checks


def stationary(out, seed=0, max_iters=20000, tol=1e-8, n_inits=200):
    prob = stationary_problem()
    cert = prob.cert
    checks = []
    window = prob.gamma_window()
    checks.append(_check_close("gamma_range_lower", window.lo, 1 / 6, 1e-12))
    checks.append(_check_close("gamma_range_upper", window.hi, 1 / 5, 1e-12))
    gamma = 11 / 60
    lam = 0.9 * 2 * alpha_drs(gamma, cert.beta_P, cert.beta_D)
    cfg = DRSConfig(gamma, Fixed(lam), max_iters=max_iters, stop_tol=tol, selection=ResolventSelection.uniform(seed))
    worst_res, worst_q, worst_r2, worst_gap = 0.0, 0.0, 1.0, math.inf
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write("s0,iterations,final_residual,q,r2\n")
        for s0 in np.linspace(-5.0, 5.0, n_inits):
            tr = run_drs(prob.A, prob.B, cert, [s0], cfg)
            q, r2 = rlinear_fit(tr.residual)
            worst_res = max(worst_res, tr.residual[-1])
            worst_q, worst_r2 = max(worst_q, q), min(worst_r2, r2)
            worst_gap = min([worst_gap] + tr.fejer_gap)
            fh.write(f"{s0:.17g},{len(tr)},{tr.residual[-1]:.17g},{q:.17g},{r2:.17g}\n")
    checks.append(_check_le("sweep_converged", worst_res, 1e-6))
    checks.append(_check_le("rlinear_q", worst_q, 1.0 - 1e-12))
    checks.append(Check("rlinear_r2", worst_r2 > 0.95, worst_r2, 0.95, worst_r2 - 0.95))
    checks.append(Check("fejer_gaps", worst_gap >= -1e-9, worst_gap, -1e-9, worst_gap + 1e-9))
    return checks


EXPERIMENTS = {
    "toy-ppa": toy_ppa,
    "saddle-drs": saddle_drs,
    "nonsmooth-min": nonsmooth_min,
    "stationary": stationary,
}


def reproduce(example_id, out, seed=0, **kwargs):
    """Run one experiment, write ``summary.json`` to ``out`` and return the checks."""
    os.makedirs(out, exist_ok=True)
    checks = EXPERIMENTS[example_id](out, seed=seed, **kwargs)
    summary = {"example": example_id, "seed": seed, "checks": [asdict(c) for c in checks]}
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return checks
