"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line to the terminal (also when
output capture is on). Run standalone with ``python tests/test_acceptance.py``.
"""

import math
import sys

import numpy as np
import pytest

from generators import certified_operator, graph_values, min_slack, random_params
from semisplit import semicalc as sc
from semisplit.catalog import nonsmooth_problem, stationary_problem, toy_certificate, toy_operator
from semisplit.drs import DRSConfig, alpha_drs, gamma_range_minty, run_drs
from semisplit.operators import BreakInterval, BreakSet, PiecewiseGradient
from semisplit.pppa import Fixed, PPPAConfig, Preconditioner, eta_min, run_pppa
from semisplit.reproduce import EXPERIMENTS
from semisplit.semicalc import SemiParams

SLACK = -1e-9
_results = {}


def report(num, title, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {title}" + (f" ({detail})" if detail else "")
    _results[num] = ok
    return line


@pytest.fixture
def emit(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def _emit(line):
        if capman is None:
            print(line)
            return
        with capman.global_and_fixture_disabled():
            sys.stdout.write("\n" + line + "\n")
            sys.stdout.flush()

    return _emit


@pytest.fixture(scope="module")
def experiments(tmp_path_factory):
    out = {}
    for name, fn in EXPERIMENTS.items():
        checks = fn(str(tmp_path_factory.mktemp(name)), seed=0)
        out[name] = {c.name: c for c in checks}
    return out


def _checks_line(checks):
    return ", ".join(f"{c.name} {c.value:.6g}" for c in checks)


# -- 1-4, 6, 7: reference experiments --------------------------------------------------------


def _experiment_criterion(emit, experiments, num, title, picks):
    checks = [experiments[exp][name] for exp, name in picks]
    ok = all(c.passed for c in checks)
    emit(report(num, title, ok, _checks_line(checks)))
    assert ok


def test_criterion_1_toy_tightness(emit, experiments):
    picks = [("toy-ppa", n) for n in ("lambda_bar_crossing", "converge_lambda_2.3", "diverge_lambda_2.5")]
    _experiment_criterion(emit, experiments, 1, "toy PPA relaxation threshold 2.4", picks)


def test_criterion_2_saddle_tightness(emit, experiments):
    picks = [("saddle-drs", n) for n in ("lambda_bar_crossing", "nonmonotonicity_traces")]
    _experiment_criterion(emit, experiments, 2, "saddle DRS threshold 0.4 and traces -2", picks)


def test_criterion_3_gamma_ranges(emit, experiments):
    picks = [("nonsmooth-min", "gamma_range_upper"), ("stationary", "gamma_range_lower"), ("stationary", "gamma_range_upper")]
    _experiment_criterion(emit, experiments, 3, "DRS stepsize windows", picks)


def test_criterion_4_rate_bound(emit, experiments):
    _experiment_criterion(emit, experiments, 4, "best-iterate rate bound", [("nonsmooth-min", "rate_bound")])


# -- 5: Fejer suite ------------------------------------------------------------------------


def _drs_square_sum_ratio(prob, gamma, lam, s0, **kw):
    """Fejer telescoping: sum lam (2 alpha - lam) |u - v|^2 <= |s0 - s*|^2."""
    cert = prob.cert
    tr = run_drs(prob.A, prob.B, cert, [s0], DRSConfig(gamma, Fixed(lam), **kw))
    alpha = tr.alpha
    total = lam * (2 * alpha - lam) * sum(r * r for r in tr.residual)
    bound = min(float(np.sum((tr.s[0] - st) ** 2)) for st in cert.sstar(gamma))
    return total / bound if bound > 0 else 0.0, min(tr.fejer_gap, default=0.0)


def test_criterion_5_fejer_suite(emit, experiments):
    worst_gap = min(experiments[e]["fejer_gaps"].value for e in ("toy-ppa", "nonsmooth-min", "stationary"))
    worst_ratio = 0.0

    T, P, cert = toy_operator(), Preconditioner.identity(2), toy_certificate()
    rng = np.random.default_rng(5)
    for x0 in rng.uniform(-2, 2, (8, 2)):
        tr = run_pppa(T, P, cert.V, cert, x0, PPPAConfig(Fixed(2.3), max_iters=3000), rng=rng)
        total = sum(l * (2 * a - l) * r * r for l, a, r in zip(tr.lam, tr.alpha, tr.shadow_res))
        worst_ratio = max(worst_ratio, total / float(x0 @ x0))
        worst_gap = min([worst_gap] + tr.fejer_gap)

    prob = nonsmooth_problem()
    for gamma in (0.05, 0.13, 0.25):
        alpha = alpha_drs(gamma, prob.cert.beta_P, prob.cert.beta_D)
        for frac in (0.2, 0.5, 0.9):
            for s0 in (-3.0, 0.7, 2.5):
                ratio, gap = _drs_square_sum_ratio(prob, gamma, 2 * frac * alpha, s0, max_iters=400)
                worst_ratio, worst_gap = max(worst_ratio, ratio), min(worst_gap, gap)

    prob = stationary_problem()
    gamma = 11 / 60
    lam = 0.9 * 2 * alpha_drs(gamma, prob.cert.beta_P, prob.cert.beta_D)
    for s0 in (-5.0, -1.0, 2.0, 5.0):
        ratio, gap = _drs_square_sum_ratio(prob, gamma, lam, s0, max_iters=20000, stop_tol=1e-8)
        worst_ratio, worst_gap = max(worst_ratio, ratio), min(worst_gap, gap)

    ok = worst_gap >= SLACK and worst_ratio <= 1 + 1e-9
    emit(report(5, "Fejer gaps and square-summable residuals", ok,
                f"min gap {worst_gap:.3e}, max partial sum / bound {worst_ratio:.6f}"))
    assert ok


def test_criterion_6_equivalence(emit, experiments):
    picks = [("saddle-drs", "equivalence"), ("nonsmooth-min", "equivalence")]
    _experiment_criterion(emit, experiments, 6, "DRS equals primal-dual PPPA", picks)


def test_criterion_7_stationary(emit, experiments):
    picks = [("stationary", n) for n in ("sweep_converged", "rlinear_q", "rlinear_r2")]
    _experiment_criterion(emit, experiments, 7, "stationary-point sweep and R-linear fit", picks)


# -- 8: calculus property suite ----------------------------------------------------------


def _pairs(T, rng, k=300):
    return [(np.atleast_1d(x), np.atleast_1d(y)) for x, y in T.sample_graph(rng, k)]


def _piecewise(rng, slope_lo, slope_hi, jump):
    """Piecewise affine gradient with slopes in [slope_lo, slope_hi].

    ``jump`` is ``'up'`` (interval values, convex kinks), ``'down'`` (two-point
    limiting subgradients, concave kinks) or ``'none'`` (continuous).
    """
    n = int(rng.integers(1, 4))
    bps = np.sort(rng.uniform(-2, 2, n))
    slopes = rng.uniform(slope_lo, slope_hi, n + 1)
    intercepts, values = [rng.uniform(-1, 1)], []
    for i, p in enumerate(bps):
        left = slopes[i] * p + intercepts[i]
        size = 0.0 if jump == "none" else rng.uniform(0.1, 2.0)
        right = left + size if jump == "up" else left - size
        intercepts.append(right - slopes[i + 1] * p)
        if jump == "up":
            values.append(BreakInterval(left, right))
        else:
            values.append(BreakSet(tuple(sorted({left, right}))))
    return PiecewiseGradient(tuple(bps), tuple(slopes), tuple(intercepts), tuple(values))


def _pointwise_min_graph(rng, ells):
    coef = [(l, rng.uniform(-2, 2), rng.uniform(-2, 2)) for l in ells]
    vals = lambda x: np.array([l / 2 * x * x + b * x + c for l, b, c in coef])
    grads = lambda x: np.array([l * x + b for l, b, _ in coef])
    xs = list(rng.uniform(-3, 3, 400))
    for i in range(len(coef)):
        for j in range(i + 1, len(coef)):
            # crossing points of f_i and f_j
            da, db, dc = (coef[i][0] - coef[j][0]) / 2, coef[i][1] - coef[j][1], coef[i][2] - coef[j][2]
            xs += [r.real for r in np.roots([da, db, dc]) if abs(r.imag) < 1e-12 and abs(r.real) < 3]
    pairs = []
    for x in xs:
        v = vals(x)
        active = np.where(v <= v.min() + 1e-12 * max(1.0, abs(v.min())))[0]
        pairs += [(np.array([x]), np.array([grads(x)[i]])) for i in active]
    return pairs


def _rule_checks(rng):
    out = {}

    # inverse, identity shift, monotone embedding
    worst = {"inverse": math.inf, "identity-shift": math.inf, "monotone-embedding": math.inf}
    for _ in range(10):
        p = random_params(rng)
        T = certified_operator(rng, p)
        pairs = _pairs(T, rng)
        worst["inverse"] = min(worst["inverse"], min_slack([(y, x) for x, y in pairs], sc.inverse_params(p), rng))
        alpha = rng.uniform(-2, 2)
        q, _ = sc.shift_identity_params(p, alpha)
        worst["identity-shift"] = min(worst["identity-shift"], min_slack([(x, y + alpha * x) for x, y in pairs], q, rng))
        xi, nu = sc.monotone_embedding(p)
        emb = [(y - nu * x, x - xi * (y - nu * x)) for x, y in pairs]
        worst["monotone-embedding"] = min(worst["monotone-embedding"], min_slack(emb, SemiParams(0.0, 0.0), rng))
    out.update(worst)

    # sum and parallel sum
    worst_sum = worst_par = math.inf
    for _ in range(10):
        while True:
            pA, pB = random_params(rng), random_params(rng)
            if pA.rho + pB.rho > 0.05 and pA.mu + pB.mu > 0.05:
                break
        A, B = certified_operator(rng, pA), certified_operator(rng, pB)
        pairs = [(np.atleast_1d(x), a + b) for x in rng.uniform(-3, 3, 200) for a in graph_values(A, x) for b in graph_values(B, x)]
        worst_sum = min(worst_sum, min_slack(pairs, sc.sum_params(pA, pB), rng))
        pairs = [
            (a + b, np.atleast_1d(y))
            for y in rng.uniform(-3, 3, 200)
            for a in A.preimage([y], 0.0, 1.0).points
            for b in B.preimage([y], 0.0, 1.0).points
        ]
        worst_par = min(worst_par, min_slack(pairs, sc.parallel_sum_params(pA, pB), rng))
    out["sum"], out["parallel-sum"] = worst_sum, worst_par

    # curvature: every branch on gradients with matching curvature bounds
    worst = math.inf
    for _ in range(10):
        sigma = rng.uniform(-2, 2)
        worst = min(worst, min_slack(_pairs(_piecewise(rng, sigma, sigma + 3, "up"), rng), sc.curvature_params(sigma=sigma), rng))
        ell = rng.uniform(-3, -0.2)
        worst = min(worst, min_slack(_pairs(_piecewise(rng, ell - 3, ell, "down"), rng), sc.curvature_params(ell=ell), rng))
        ell = rng.uniform(0, 2)
        p = sc.curvature_params(ell=ell, alpha=ell + rng.uniform(0.5, 2))
        worst = min(worst, min_slack(_pairs(_piecewise(rng, ell - 3, ell, "down"), rng), p, rng))
        sigma = rng.uniform(-1, 2)
        ell = max(sigma, -sigma) + rng.uniform(0.1, 2)
        p = sc.curvature_params(sigma=sigma, ell=ell)
        worst = min(worst, min_slack(_pairs(_piecewise(rng, sigma, ell, "none"), rng), p, rng))
        sigma = rng.uniform(-3, -1)
        ell = rng.uniform(sigma, -sigma)
        p = sc.curvature_params(sigma=sigma, ell=ell)
        worst = min(worst, min_slack(_pairs(_piecewise(rng, sigma, ell, "none"), rng), p, rng))
    out["curvature"] = worst

    # pointwise minimum of quadratics
    worst = math.inf
    for _ in range(10):
        ells = rng.uniform(-2, 2, int(rng.integers(2, 5)))
        ell_max = max(ells)
        p = sc.pointwise_min_params(ells) if ell_max < 0 else sc.pointwise_min_params(ells, alpha=ell_max + rng.uniform(0.5, 2))
        worst = min(worst, min_slack(_pointwise_min_graph(rng, ells), p, rng))
    out["pointwise-min"] = worst

    # saddle operator of a quadratic p/2 x^2 + c x y - q/2 y^2
    worst = math.inf
    for _ in range(200):
        delta = rng.uniform(0.1, 2)
        p_, q_ = rng.uniform(-1 / delta + 0.05, 3, 2)
        c = rng.uniform(-3, 3)
        alpha = min(p_ + c * c / (1 / delta + q_), q_ + c * c / (1 / delta + p_))
        if not alpha > -1 / delta:
            continue
        params = sc.saddle_params(alpha, delta)
        M = np.array([[p_, c], [-c, q_]])
        for _ in range(5):
            x, x0 = rng.standard_normal(2), rng.standard_normal(2)
            s = sc.semimonotone_slack(x, M @ x, x0, M @ x0, params)
            worst = min(worst, s / max(1.0, float(np.sum((x - x0) ** 2))))
    out["saddle"] = worst
    return out


def _lipschitz_and_range(rng):
    worst_ratio = 0.0
    for _ in range(20):
        p = random_params(rng)
        T = certified_operator(rng, p)
        rr = sc.resolvent_gamma_range(p)
        gamma = rng.uniform(rr.lo, min(rr.hi, rr.lo + 5.0))
        if gamma not in rr:
            continue
        L = sc.resolvent_lipschitz(p, gamma)
        sols = [(s, float(x[0])) for s in rng.uniform(-4, 4, 60) for x in T.preimage([s], 1.0, gamma).points]
        for (s, x), (s2, x2) in zip(sols, sols[1:]):
            if s != s2:
                worst_ratio = max(worst_ratio, abs(x - x2) / (L * abs(s - s2)))
    worst_range = 0.0
    for _ in range(1000):
        p = random_params(rng, bound=3.0)
        a, b = sc.resolvent_gamma_range(p), sc.positive_quadratic_range(p.mu, 1.0, p.rho)
        for u, v in ((a.lo, b.lo), (a.hi, b.hi)):
            if not (math.isinf(u) and u == v):
                worst_range = max(worst_range, abs(u - v))
    return worst_ratio, worst_range


def test_criterion_8_calculus_suite(emit):
    rng = np.random.default_rng(8)
    rules = _rule_checks(rng)
    lip_ratio, range_err = _lipschitz_and_range(rng)
    worst_rule = min(rules, key=rules.get)
    ok = all(v >= SLACK for v in rules.values()) and lip_ratio <= 1 + 1e-9 and range_err <= 1e-14
    emit(report(8, "calculus rules on generated operators", ok,
                f"worst rule {worst_rule} slack {rules[worst_rule]:.3e}, Lipschitz ratio {lip_ratio:.6f}, range error {range_err:.1e}"))
    assert ok


# -- 9: eta_min identity ---------------------------------------------------------------------


def test_criterion_9_eta_min_identity(emit):
    rng = np.random.default_rng(9)
    worst, count = 0.0, 0
    while count < 1000:
        bp, bd = rng.uniform(-1, 1, 2)
        if min(bp, 0) * min(bd, 0) >= 0.25:
            continue
        rr = gamma_range_minty(bp, bd)
        g = rng.uniform(rr.lo, min(rr.hi, rr.lo + 10))
        if g not in rr:
            continue
        n = int(rng.integers(1, 4))
        V = np.diag([bp] * n + [bd] * n)
        worst = max(worst, abs(eta_min(Preconditioner.drs(g, n), V) - (1 + bp / g + g * bd)))
        count += 1
    ok = worst <= 1e-12
    emit(report(9, "eta_min on the DRS preconditioner", ok, f"max error {worst:.1e} over {count} triples"))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
